#include "kgflock/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "kgflock/error.hpp"

namespace kgflock {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_master(const Lattice& lattice, const MasterState& s) {
  require_size(lattice, s.x1, "X1");
  require_size(lattice, s.x2, "X2");
}

// Laplacian by explicit coordinate shifts on the torus.
NodeField coordinate_laplacian(const Lattice& lattice, std::span<const double> f) {
  const int d = lattice.per_side();
  NodeField out(lattice.size());
  for (NodeIndex l = 0; l < lattice.size(); ++l) {
    std::vector<int> c = lattice.coordinates(l);
    double acc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      const int orig = c[k];
      c[k] = (orig + 1) % d;
      acc += f[lattice.index(c)] - f[l];
      c[k] = (orig - 1 + d) % d;
      acc += f[lattice.index(c)] - f[l];
      c[k] = orig;
    }
    out[l] = acc * lattice.inv_spacing_sq();
  }
  return out;
}

// Reduced drift for a reduced point; out has grid dimension entries.
void reduced_drift(const Lattice& lattice, const Params& params, std::span<const double> p,
                   std::span<const double> w, std::span<double> out) {
  const std::size_t n = lattice.size();
  MasterState s{NodeField(n, 0.0), NodeField(p.begin() + static_cast<std::ptrdiff_t>(n - 1), p.end())};
  for (std::size_t k = 1; k < n; ++k) s.x1[k] = p[k - 1];
  const MasterState b = master_drift(lattice, params, s, w);
  for (std::size_t k = 1; k < n; ++k) out[k - 1] = b.x1[k] - b.x1[0];
  for (std::size_t l = 0; l < n; ++l) out[n - 1 + l] = b.x2[l];
}

std::vector<std::vector<double>> control_corners(std::size_t n, double bound) {
  std::vector<std::vector<double>> all{{}};
  for (std::size_t l = 0; l < n; ++l) {
    std::vector<std::vector<double>> next;
    for (const auto& partial : all)
      for (double w : {-bound, 0.0, bound}) {
        next.push_back(partial);
        next.back().push_back(w);
      }
    all = std::move(next);
  }
  return all;
}

}  // namespace

MasterState master_drift(const Lattice& lattice, const Params& params, const MasterState& state,
                         std::span<const double> control) {
  require_master(lattice, state);
  require_size(lattice, control, "W");
  MasterState out{state.x2, coordinate_laplacian(lattice, state.x1)};
  for (std::size_t l = 0; l < out.x2.size(); ++l) {
    const double v = state.x2[l];
    out.x2[l] = (out.x2[l] + (params.alpha() - params.beta() * v * v) * v) + control[l];
  }
  return out;
}

double hamiltonian(const Lattice& lattice, const Params& params, const MasterState& state,
                   const MasterState& costate) {
  require_master(lattice, costate);
  const NodeField zero(lattice.size(), 0.0);
  const MasterState b = master_drift(lattice, params, state, zero);
  double dot = 0.0;
  double p2 = 0.0;
  for (std::size_t l = 0; l < lattice.size(); ++l) {
    dot += b.x1[l] * costate.x1[l] + b.x2[l] * costate.x2[l];
    p2 += std::abs(costate.x2[l]);
  }
  return -dot + params.bound() * p2 - 1.0;
}

bool in_target(const Lattice& lattice, const Params& params, const MasterState& state,
               double velocity_tol) {
  require_master(lattice, state);
  const NodeField lap = coordinate_laplacian(lattice, state.x1);
  for (double a : lap)
    if (!(std::abs(a) <= params.bound())) return false;
  const double vbar = params.flock_speed();
  auto all_near = [&](double g) {
    return std::all_of(state.x2.begin(), state.x2.end(),
                       [&](double v) { return std::abs(v - g) <= velocity_tol; });
  };
  return all_near(vbar) || all_near(-vbar);
}

ReducedGrid::ReducedGrid(const Lattice& lattice, std::vector<GridAxis> axes)
    : lattice_(lattice), axes_(std::move(axes)), size_(1) {
  for (const auto& a : axes_) size_ *= a.points;
}

ReducedGrid ReducedGrid::create(const Lattice& lattice, const Params& params,
                                std::vector<GridAxis> axes) {
  const std::size_t n = lattice.size();
  if (2 * n - 1 > 4)
    throw DimensionError("reduced HJB grid needs 2N - 1 <= 4, got N = " + std::to_string(n));
  if (axes.size() != 2 * n - 1)
    throw DimensionError("reduced HJB grid needs " + std::to_string(2 * n - 1) + " axes, got " +
                         std::to_string(axes.size()));
  const double vbar = params.flock_speed();
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const GridAxis& a = axes[k];
    const std::string name = "axis " + std::to_string(k);
    if (a.points < 8) throw ParameterError(name + " needs at least 8 points");
    if (!(a.lo < a.hi) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
      throw ParameterError(name + " needs finite bounds lo < hi");
    const bool position = k + 1 < n;
    const bool ok = position ? (a.lo <= 0.0 && 0.0 <= a.hi) : (a.lo <= -vbar && vbar <= a.hi);
    if (!ok) throw ParameterError(name + " bounds do not contain the target slice");
  }
  return ReducedGrid(lattice, std::move(axes));
}

std::vector<std::size_t> ReducedGrid::multi_index(std::size_t flat) const {
  std::vector<std::size_t> m(axes_.size());
  for (std::size_t k = axes_.size(); k-- > 0;) {
    m[k] = flat % axes_[k].points;
    flat /= axes_[k].points;
  }
  return m;
}

std::size_t ReducedGrid::flat_index(std::span<const std::size_t> multi) const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < axes_.size(); ++k) flat = flat * axes_[k].points + multi[k];
  return flat;
}

std::vector<double> ReducedGrid::point(std::size_t flat) const {
  const auto m = multi_index(flat);
  std::vector<double> p(axes_.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = axes_[k].coordinate(m[k]);
  return p;
}

std::size_t ReducedGrid::nearest(std::span<const double> reduced) const {
  if (reduced.size() != axes_.size()) throw DimensionError("reduced point has wrong dimension");
  std::vector<std::size_t> m(axes_.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    const GridAxis& a = axes_[k];
    const double s = std::round((reduced[k] - a.lo) / a.step());
    m[k] = static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(a.points - 1)));
  }
  return flat_index(m);
}

bool ReducedGrid::contains(std::span<const double> reduced) const {
  for (std::size_t k = 0; k < axes_.size(); ++k)
    if (!(reduced[k] >= axes_[k].lo && reduced[k] <= axes_[k].hi)) return false;
  return true;
}

double ReducedGrid::min_cell() const {
  double m = kInf;
  for (const auto& a : axes_) m = std::min(m, a.step());
  return m;
}

double ReducedGrid::cell_diameter() const {
  double s = 0.0;
  for (const auto& a : axes_) s += a.step() * a.step();
  return std::sqrt(s);
}

MasterState ReducedGrid::master(std::span<const double> reduced) const {
  if (reduced.size() != axes_.size()) throw DimensionError("reduced point has wrong dimension");
  const std::size_t n = nodes();
  MasterState s{NodeField(n, 0.0), NodeField(n)};
  for (std::size_t k = 1; k < n; ++k) s.x1[k] = reduced[k - 1];
  for (std::size_t l = 0; l < n; ++l) s.x2[l] = reduced[n - 1 + l];
  return s;
}

std::vector<double> ReducedGrid::reduce(const MasterState& state) const {
  require_master(lattice_, state);
  const std::size_t n = nodes();
  std::vector<double> p(axes_.size());
  for (std::size_t k = 1; k < n; ++k) p[k - 1] = state.x1[k] - state.x1[0];
  for (std::size_t l = 0; l < n; ++l) p[n - 1 + l] = state.x2[l];
  return p;
}

ReducedGrid default_grid(const Lattice& lattice, const Params& params, std::size_t points) {
  const std::size_t n = lattice.size();
  const double vmax = 2.0 * params.flock_speed() + 1.0;
  std::vector<GridAxis> axes;
  for (std::size_t k = 1; k < n; ++k) axes.push_back({-2.0, 2.0, points});
  for (std::size_t l = 0; l < n; ++l) axes.push_back({-vmax, vmax, points});
  return ReducedGrid::create(lattice, params, std::move(axes));
}

ValueField::ValueField(ReducedGrid grid, std::vector<double> values, double dt, std::size_t sweeps,
                       double residual)
    : grid_(std::move(grid)), values_(std::move(values)), dt_(dt), sweeps_(sweeps),
      residual_(residual) {
  if (values_.size() != grid_.size()) throw DimensionError("value field size does not match grid");
}

double ValueField::interpolate(std::span<const double> reduced) const {
  if (reduced.size() != grid_.dimension()) throw DimensionError("reduced point has wrong dimension");
  if (!grid_.contains(reduced)) return kInf;
  const auto& axes = grid_.axes();
  const std::size_t d = axes.size();
  std::vector<std::size_t> base(d);
  std::vector<double> frac(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double s = (reduced[k] - axes[k].lo) / axes[k].step();
    const double b = std::min(std::floor(s), static_cast<double>(axes[k].points - 2));
    base[k] = static_cast<std::size_t>(std::max(b, 0.0));
    frac[k] = s - static_cast<double>(base[k]);
  }
  double acc = 0.0;
  std::vector<std::size_t> corner(d);
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      const bool up = (mask >> k) & 1u;
      corner[k] = base[k] + (up ? 1 : 0);
      w *= up ? frac[k] : 1.0 - frac[k];
    }
    if (w == 0.0) continue;
    const double u = values_[grid_.flat_index(corner)];
    if (std::isinf(u)) return kInf;
    acc += w * u;
  }
  return acc;
}

double ValueField::lipschitz_estimate() const {
  double worst = 0.0;
  const auto& axes = grid_.axes();
  for (std::size_t p = 0; p < values_.size(); ++p) {
    if (!std::isfinite(values_[p])) continue;
    auto m = grid_.multi_index(p);
    for (std::size_t k = 0; k < axes.size(); ++k) {
      if (m[k] + 1 >= axes[k].points) continue;
      ++m[k];
      const double q = values_[grid_.flat_index(m)];
      --m[k];
      if (std::isfinite(q)) worst = std::max(worst, std::abs(q - values_[p]) / axes[k].step());
    }
  }
  return worst;
}

void ValueField::write(std::ostream& out) const {
  out << "# kgflock value field\n";
  out << "nodes: " << grid_.nodes() << "\n";
  out << "dimension: " << grid_.dimension() << "\n";
  for (std::size_t k = 0; k < grid_.dimension(); ++k) {
    const auto& a = grid_.axes()[k];
    const bool position = k + 1 < grid_.nodes();
    const std::string name = position ? "dx" + std::to_string(k + 1)
                                      : "v" + std::to_string(k + 1 - grid_.nodes());
    out << "axis: " << name << " " << format_double(a.lo) << " " << format_double(a.hi) << " "
        << a.points << "\n";
  }
  out << "dt: " << format_double(dt_) << "\n";
  out << "sweeps: " << sweeps_ << "\n";
  out << "residual: " << format_double(residual_) << "\n";
  out << "values:\n";
  for (double u : values_) out << format_double(u) << "\n";
}

void ValueField::write_slice(std::ostream& out, std::span<const double> anchor, std::size_t axis_a,
                             std::size_t axis_b) const {
  const std::size_t d = grid_.dimension();
  if (axis_a >= d || axis_b >= d) throw DimensionError("slice axis out of range");
  auto m = grid_.multi_index(grid_.nearest(anchor));
  const auto& axes = grid_.axes();
  const std::size_t nb = axis_b == axis_a ? 1 : axes[axis_b].points;
  out << "a,b,U\n";
  for (std::size_t i = 0; i < axes[axis_a].points; ++i) {
    m[axis_a] = i;
    for (std::size_t j = 0; j < nb; ++j) {
      if (axis_b != axis_a) m[axis_b] = j;
      out << format_double(axes[axis_a].coordinate(i)) << ","
          << format_double(axis_b == axis_a ? 0.0 : axes[axis_b].coordinate(j)) << ","
          << format_double(values_[grid_.flat_index(m)]) << "\n";
    }
  }
}

std::vector<bool> target_cells(const ReducedGrid& grid, const Params& params) {
  const auto& axes = grid.axes();
  const double tol = axes.back().step();
  std::vector<bool> mask(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p)
    mask[p] = in_target(grid.lattice(), params, grid.master(grid.point(p)), tol);
  return mask;
}

double drift_bound(const ReducedGrid& grid, const Params& params) {
  const std::size_t d = grid.dimension();
  const auto& axes = grid.axes();
  const auto controls = control_corners(grid.nodes(), params.bound());
  std::vector<double> p(d), b(d);
  double worst = 0.0;
  // |b~| is maximised at box corners for the cubic only up to its turning
  // point, so the peak speed is also sampled on every velocity axis.
  std::vector<std::vector<double>> choices(d);
  for (std::size_t k = 0; k < d; ++k) {
    choices[k] = {axes[k].lo, axes[k].hi, 0.0};
    if (k + 1 >= grid.nodes()) {
      const double s = cubic_peak_speed(params.alpha(), params.beta());
      for (double c : {s, -s})
        if (c > axes[k].lo && c < axes[k].hi) choices[k].push_back(c);
    }
  }
  std::vector<std::size_t> pick(d, 0);
  while (true) {
    for (std::size_t k = 0; k < d; ++k) p[k] = choices[k][pick[k]];
    for (const auto& w : controls) {
      reduced_drift(grid.lattice(), params, p, w, b);
      double s = 0.0;
      for (double x : b) s += x * x;
      worst = std::max(worst, std::sqrt(s));
    }
    std::size_t k = 0;
    while (k < d && ++pick[k] == choices[k].size()) pick[k++] = 0;
    if (k == d) break;
  }
  return worst;
}

ValueField value_iteration(const ReducedGrid& grid, const Params& params,
                           const ValueIterationOptions& options) {
  const std::size_t d = grid.dimension();
  const double dt = options.dt ? *options.dt : 0.5 * grid.min_cell() / drift_bound(grid, params);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("value iteration dt must be positive");
  if (!(options.tol > 0.0)) throw ParameterError("value iteration tol must be positive");

  const auto& axes = grid.axes();
  const auto controls = control_corners(grid.nodes(), params.bound());
  const std::vector<bool> target = target_cells(grid, params);
  const std::size_t corners = std::size_t{1} << d;
  const std::size_t per_point = controls.size() * corners;

  // Precomputed interpolation stencils; an empty stencil (weight sum 0) means
  // the foot point left the box.
  std::vector<std::uint32_t> idx(grid.size() * per_point, 0);
  std::vector<double> wts(grid.size() * per_point, 0.0);
  std::vector<double> p(d), b(d), foot(d);
  std::vector<std::size_t> base(d), corner(d);
  std::vector<double> frac(d);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    if (target[q]) continue;
    p = grid.point(q);
    for (std::size_t c = 0; c < controls.size(); ++c) {
      reduced_drift(grid.lattice(), params, p, controls[c], b);
      bool inside = true;
      for (std::size_t k = 0; k < d; ++k) {
        foot[k] = p[k] + dt * b[k];
        const double slack = 1e-12 * (axes[k].hi - axes[k].lo);
        if (foot[k] < axes[k].lo - slack || foot[k] > axes[k].hi + slack) inside = false;
        foot[k] = std::clamp(foot[k], axes[k].lo, axes[k].hi);
      }
      if (!inside) continue;
      for (std::size_t k = 0; k < d; ++k) {
        const double s = (foot[k] - axes[k].lo) / axes[k].step();
        const double fl = std::min(std::floor(s), static_cast<double>(axes[k].points - 2));
        base[k] = static_cast<std::size_t>(std::max(fl, 0.0));
        frac[k] = s - static_cast<double>(base[k]);
      }
      const std::size_t off = q * per_point + c * corners;
      for (std::size_t mask = 0; mask < corners; ++mask) {
        double w = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
          const bool up = (mask >> k) & 1u;
          corner[k] = base[k] + (up ? 1 : 0);
          w *= up ? frac[k] : 1.0 - frac[k];
        }
        idx[off + mask] = static_cast<std::uint32_t>(grid.flat_index(corner));
        wts[off + mask] = w;
      }
    }
  }

  const double decay = std::exp(-dt);
  const double gain = -std::expm1(-dt);
  std::vector<double> w(grid.size(), 1.0), next(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q)
    if (target[q]) w[q] = 0.0;

  std::size_t sweeps = 0;
  double residual = kInf;
  while (true) {
    residual = 0.0;
    for (std::size_t q = 0; q < grid.size(); ++q) {
      if (target[q]) {
        next[q] = 0.0;
        continue;
      }
      double best = 1.0;
      const std::size_t row = q * per_point;
      for (std::size_t c = 0; c < controls.size(); ++c) {
        const std::size_t off = row + c * corners;
        double acc = 0.0, wsum = 0.0;
        for (std::size_t m = 0; m < corners; ++m) {
          acc += wts[off + m] * w[idx[off + m]];
          wsum += wts[off + m];
        }
        if (wsum == 0.0) continue;
        best = std::min(best, gain + decay * acc);
      }
      next[q] = best;
      residual = std::max(residual, std::abs(best - w[q]));
    }
    w.swap(next);
    ++sweeps;
    if (residual < options.tol) break;
    if (sweeps >= options.max_sweeps) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "value iteration did not converge in " << sweeps << " sweeps (residual " << residual
          << ", tol " << options.tol << ")";
      throw ConvergenceError(msg.str(), sweeps, residual);
    }
  }

  std::vector<double> u(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q)
    u[q] = target[q] ? 0.0 : (w[q] >= 1.0 ? kInf : -std::log1p(-w[q]));
  ValueField field(grid, std::move(u), dt, sweeps, residual);
  field.set_target_mask(target);
  return field;
}

double bang_bang_oracle(const Params& params, double start, double dt_fine, double t_max) {
  if (!(dt_fine > 0.0)) throw ParameterError("oracle step must be positive");
  const double vbar = params.flock_speed();
  if (start == vbar || start == -vbar) return 0.0;
  const double a = params.alpha(), b = params.beta();
  auto f = [&](double v, double w) { return (a - b * v * v) * v + w; };
  auto hit = [&](double w) {
    double v = start, t = 0.0;
    while (t < t_max) {
      const double k1 = f(v, w);
      const double k2 = f(v + 0.5 * dt_fine * k1, w);
      const double k3 = f(v + 0.5 * dt_fine * k2, w);
      const double k4 = f(v + dt_fine * k3, w);
      const double nv = v + dt_fine / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      for (double g : {vbar, -vbar}) {
        if ((v - g) * (nv - g) <= 0.0 && nv != v) return t + dt_fine * (g - v) / (nv - v);
      }
      v = nv;
      t += dt_fine;
    }
    return kInf;
  };
  return std::min(hit(params.bound()), hit(-params.bound()));
}

}  // namespace kgflock
