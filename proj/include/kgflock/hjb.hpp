#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgflock/dynamics.hpp"

namespace kgflock {

// Minimal-time value function on the translation-reduced master state.
//
// Reduced coordinates are (x_k - x_0 for k = 1..N-1, v_0..v_{N-1}), so the
// grid dimension is 2N - 1 and only N <= 2 fits the dimension cap of 4.
// Experimental: accuracy claims rest on the single-node oracle only.

struct MasterState {
  NodeField x1;  // positions
  NodeField x2;  // velocities
};

/// X' = b(X) + (0, W), computed from lattice coordinates rather than the
/// neighbour table so it can cross-check dynamics.drift.
MasterState master_drift(const Lattice& lattice, const Params& params, const MasterState& state,
                         std::span<const double> control);

/// H = -b(X).P + M |P2|_1 - 1.
double hamiltonian(const Lattice& lattice, const Params& params, const MasterState& state,
                   const MasterState& costate);

/// max_l |Delta X1(l)| <= M and X2 within velocity_tol of +v or -v at every node
/// (one sign for all nodes).
bool in_target(const Lattice& lattice, const Params& params, const MasterState& state,
               double velocity_tol = 0.0);

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 0;
  double step() const noexcept { return (hi - lo) / static_cast<double>(points - 1); }
  double coordinate(std::size_t i) const noexcept {
    return i + 1 == points ? hi : lo + static_cast<double>(i) * step();
  }
};

class ReducedGrid {
 public:
  /// Throws DimensionError unless axes.size() == 2N - 1 <= 4, ParameterError on
  /// fewer than 8 points per axis, empty bounds, or bounds that miss the target slice.
  static ReducedGrid create(const Lattice& lattice, const Params& params, std::vector<GridAxis> axes);

  const Lattice& lattice() const noexcept { return lattice_; }
  std::size_t nodes() const noexcept { return lattice_.size(); }
  std::size_t dimension() const noexcept { return axes_.size(); }
  const std::vector<GridAxis>& axes() const noexcept { return axes_; }
  std::size_t size() const noexcept { return size_; }

  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const std::size_t> multi) const;
  std::vector<double> point(std::size_t flat) const;

  /// Grid point closest to the reduced point (clamped to the box).
  std::size_t nearest(std::span<const double> reduced) const;
  bool contains(std::span<const double> reduced) const;

  double min_cell() const;
  /// Euclidean length of a cell diagonal.
  double cell_diameter() const;

  MasterState master(std::span<const double> reduced) const;
  std::vector<double> reduce(const MasterState& state) const;

 private:
  ReducedGrid(const Lattice& lattice, std::vector<GridAxis> axes);
  Lattice lattice_;
  std::vector<GridAxis> axes_;
  std::size_t size_ = 0;
};

/// Positions in [-2, 2] per difference axis, velocities in [-2v-1, 2v+1].
ReducedGrid default_grid(const Lattice& lattice, const Params& params, std::size_t points);

struct ValueIterationOptions {
  std::optional<double> dt;  // default: min cell / (2 max |b~| over the box)
  double tol = 1.0e-9;
  std::size_t max_sweeps = 200000;
};

/// U on grid points; +inf where the target is not reached inside the box.
class ValueField {
 public:
  ValueField(ReducedGrid grid, std::vector<double> values, double dt, std::size_t sweeps,
             double residual);

  const ReducedGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double at(std::size_t flat) const { return values_.at(flat); }
  /// Multilinear interpolation; +inf outside the box or next to an unreached point.
  double interpolate(std::span<const double> reduced) const;
  double dt() const noexcept { return dt_; }
  std::size_t sweeps() const noexcept { return sweeps_; }
  double residual() const noexcept { return residual_; }
  const std::vector<bool>& target_mask() const noexcept { return target_; }
  void set_target_mask(std::vector<bool> mask) { target_ = std::move(mask); }

  /// Largest |U(p) - U(q)| / |p - q| over finite axis-adjacent grid pairs.
  double lipschitz_estimate() const;

  /// Header (axes, bounds, resolutions), then values in axis-major order.
  void write(std::ostream& out) const;
  /// Two-axis slice through the grid point nearest anchor, as CSV.
  void write_slice(std::ostream& out, std::span<const double> anchor, std::size_t axis_a,
                   std::size_t axis_b) const;

 private:
  ReducedGrid grid_;
  std::vector<double> values_;
  std::vector<bool> target_;
  double dt_;
  std::size_t sweeps_;
  double residual_;
};

/// Grid points whose master state is in the target with one velocity cell of slack.
std::vector<bool> target_cells(const ReducedGrid& grid, const Params& params);

/// max |b~(X, W)| over box corners and all control corners.
double drift_bound(const ReducedGrid& grid, const Params& params);

/// Semi-Lagrangian fixed point over W_l in {-M, 0, M}, run on the Kruzkov
/// transform w = 1 - exp(-U): w <- min_W [(1 - e^{-dt}) + e^{-dt} w(X + dt b~)],
/// w = 0 on target cells, w = 1 outside the box. Throws ConvergenceError at the cap.
ValueField value_iteration(const ReducedGrid& grid, const Params& params,
                           const ValueIterationOptions& options = {});

/// First time v' = (alpha - beta v^2) v + W, W = +M or -M, reaches +-v; the
/// smaller of the two, or +inf if neither hits before t_max.
double bang_bang_oracle(const Params& params, double start, double dt_fine = 1.0e-5,
                        double t_max = 1.0e3);

}  // namespace kgflock
