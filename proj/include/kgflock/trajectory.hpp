#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kgflock/dynamics.hpp"

namespace kgflock {

enum class Phase { Damp, Freeze, Accelerate, Rendezvous, Retarget, Hold };

std::string_view phase_name(Phase phase) noexcept;
std::optional<Phase> parse_phase(std::string_view name) noexcept;

/// Recorded samples (t, x, v, u, V, phase) with flat column storage.
///
/// Row k holds the state at t_k and the control applied at the start of the
/// step leaving t_k; its phase tag is the phase that produced that control.
class Trajectory {
 public:
  explicit Trajectory(std::size_t nodes = 0) : nodes_(nodes) {}

  void append(double t, Phase phase, std::span<const double> x, std::span<const double> v,
              std::span<const double> u, double lyapunov);

  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }
  std::size_t nodes() const noexcept { return nodes_; }

  double time(std::size_t row) const { return times_.at(row); }
  Phase phase(std::size_t row) const { return phases_.at(row); }
  double lyapunov(std::size_t row) const { return lyapunov_.at(row); }
  std::span<const double> x(std::size_t row) const { return block(row, 0); }
  std::span<const double> v(std::size_t row) const { return block(row, 1); }
  std::span<const double> u(std::size_t row) const { return block(row, 2); }
  State state(std::size_t row) const;

  /// Mutable control access, used to inject faults in certification tests.
  std::span<double> mutable_u(std::size_t row);

 private:
  std::span<const double> block(std::size_t row, std::size_t which) const;

  std::size_t nodes_;
  std::vector<double> times_;
  std::vector<Phase> phases_;
  std::vector<double> lyapunov_;
  std::vector<double> values_;  // per row: x (N), v (N), u (N)
};

/// CSV with header t,x_0..,v_0..,u_0..,V,phase and round-trip decimal values.
void write_csv(const Trajectory& trajectory, std::ostream& out);
Trajectory read_csv(std::istream& in);

}  // namespace kgflock
