#include "kgflock/controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kgflock/error.hpp"
#include "kgflock/simd/kernels.hpp"

namespace kgflock {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

simd::DampingCoeffs damping_coeffs(const Params& p, DampingVariant variant) {
  return {p.bound(), p.low_speed(), p.high_speed(), variant == DampingVariant::Simple};
}

const State& require_snapshot(const std::optional<State>& snap, const char* which) {
  if (!snap) throw PreconditionError(std::string("schedule has no snapshot at ") + which);
  return *snap;
}

double require_time(const std::optional<double>& t, const char* which) {
  if (!t) throw PreconditionError(std::string("schedule has no switching time ") + which);
  return *t;
}

// u = a_ref - Delta x - (alpha - beta v^2) v at every node; `lap` holds Delta x.
void cancel_and_inject(const Params& params, const State& state, std::span<const double> lap,
                       std::span<double> u) {
  const double a = params.alpha();
  const double b = params.beta();
  for (std::size_t l = 0; l < u.size(); ++l) {
    const double v = state.v[l];
    u[l] = u[l] - lap[l] - (a - b * v * v) * v;
  }
}

}  // namespace

FlockTarget FlockTarget::create(const Lattice& lattice, double bound, FlockKind kind,
                                NodeField shape) {
  require_size(lattice, shape, "target shape");
  const NodeField lap = discrete_laplacian(lattice, shape);
  for (std::size_t l = 0; l < lap.size(); ++l) {
    if (!(std::abs(lap[l]) < bound)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "target shape violates |Delta phi| < M at node " << l << ": |Delta phi| = "
          << std::abs(lap[l]) << ", M = " << bound;
      throw ParameterError(msg.str());
    }
  }
  return FlockTarget{kind, std::move(shape)};
}

double phase1_control(const Params& p, double v) {
  const double mag = std::abs(v);
  const double M = p.bound();
  if (mag >= 2.0 * p.high_speed()) return 0.0;
  if (mag > p.high_speed()) return -M * sign(v) * (2.0 - mag / p.high_speed());
  if (mag >= p.low_speed()) return -M * sign(v);
  return -M * (v / p.low_speed());
}

double phase1_control_simple(const Params& p, double v) {
  if (std::abs(v) >= p.low_speed()) return -p.bound() * sign(v);
  return -p.bound() * (v / p.low_speed());
}

double damping_control(const Params& params, DampingVariant variant, double v) {
  return variant == DampingVariant::Simple ? phase1_control_simple(params, v)
                                           : phase1_control(params, v);
}

void damping_control(const Params& params, DampingVariant variant, std::span<const double> v,
                     std::span<double> u) {
  if (v.size() != u.size()) throw DimensionError("damping control: size mismatch");
  const auto coeffs = damping_coeffs(params, variant);
  simd::kernels().damping(v.size(), coeffs, v.data(), u.data());
}

SpeedBand classify_speed(const Params& params, double v) {
  const double mag = std::abs(v);
  if (mag > params.high_speed()) return SpeedBand::I2;
  if (mag >= params.low_speed()) return SpeedBand::I1;
  return SpeedBand::I0;
}

double epsilon_bound(const Lattice& lattice, const Params& params) {
  const double n = lattice.dimension();
  const double denom = 2.0 * n + 1.0 + 8.0 * n * lattice.inv_spacing_sq() + 2.0 * params.alpha() +
                       8.0 * params.beta();
  return std::min(1.0, params.bound() / denom);
}

bool phase1_done(const Lattice& lattice, const State& state, double eps) {
  return phase1_done(lattice, state, eps, eps);
}

bool phase1_done(const Lattice& lattice, const State& state, double speed_tol,
                 double laplacian_tol) {
  require_state(lattice, state);
  for (double v : state.v)
    if (!(std::abs(v) < speed_tol)) return false;
  const NodeField lap = discrete_laplacian(lattice, state.x);
  for (double d : lap)
    if (!(std::abs(d) < laplacian_tol)) return false;
  return true;
}

double damping_exit_speed(const Lattice& lattice, double eps) {
  return std::min(eps, eps * lattice.spacing() / (2.0 * std::sqrt(lattice.dimension())));
}

void phase2_control(const Lattice& lattice, const Params& params, const PhaseSchedule& schedule,
                    const State& state, double t, std::span<double> u) {
  require_state(lattice, state);
  require_size(lattice, u, "control");
  const State& start = require_snapshot(schedule.at_T0, "T0");
  if (schedule.T1l.size() != lattice.size())
    throw PreconditionError("schedule has no per-node ramp end times");
  for (std::size_t l = 0; l < u.size(); ++l) {
    const double v0 = start.v[l];
    u[l] = (v0 != 0.0 && t <= schedule.T1l[l]) ? -schedule.epsilon * sign(v0) : 0.0;
  }
  const NodeField lap = discrete_laplacian(lattice, state.x);
  cancel_and_inject(params, state, lap, u);
}

void phase3_control(const Lattice& lattice, const Params& params, const PhaseSchedule& schedule,
                    const State& state, double /*t*/, std::span<double> u) {
  require_state(lattice, state);
  require_size(lattice, u, "control");
  const double w = sign(schedule.flock_speed) * 0.5 * params.bound();
  std::fill(u.begin(), u.end(), w);
  const NodeField lap = discrete_laplacian(lattice, state.x);
  cancel_and_inject(params, state, lap, u);
}

void rendezvous_control(const Lattice& lattice, const Params& params,
                        const PhaseSchedule& schedule, const State& state, double t,
                        std::span<double> u) {
  require_state(lattice, state);
  require_size(lattice, u, "control");
  const State& start = require_snapshot(schedule.at_T2, "T2");
  const double t2 = require_time(schedule.T2, "T2");
  const double t3 = require_time(schedule.T3, "T3");
  for (std::size_t l = 0; l < u.size(); ++l)
    u[l] = CubicBlend{t2, t3, schedule.y_bar - start.x[l]}.acceleration(t);
  const NodeField lap = discrete_laplacian(lattice, state.x);
  cancel_and_inject(params, state, lap, u);
}

void retarget_control(const Lattice& lattice, const Params& params, const PhaseSchedule& schedule,
                      const FlockTarget& target, const State& state, double t,
                      std::span<double> u) {
  require_state(lattice, state);
  require_size(lattice, u, "control");
  require_size(lattice, target.shape, "target shape");
  const State& start = require_snapshot(schedule.at_T3, "T3");
  const double t3 = require_time(schedule.T3, "T3");
  const double t4 = require_time(schedule.T4, "T4");
  for (std::size_t l = 0; l < u.size(); ++l)
    u[l] = CubicBlend{t3, t4, target.shape[l] - start.x[l]}.acceleration(t);
  const NodeField lap = discrete_laplacian(lattice, state.x);
  cancel_and_inject(params, state, lap, u);
}

void hold_control(const Lattice& lattice, const State& state, std::span<double> u) {
  require_state(lattice, state);
  require_size(lattice, u, "control");
  discrete_laplacian(lattice, state.x, u);
  for (double& value : u) value = -value;
}

double CubicBlend::offset(double t) const {
  const double s = (t - start) / (end - start);
  return (3.0 * s * s - 2.0 * s * s * s) * displacement;
}

double CubicBlend::velocity(double t) const {
  const double tau = end - start;
  return 6.0 * displacement * (t - start) * (end - t) / (tau * tau * tau);
}

double CubicBlend::acceleration(double t) const {
  const double tau = end - start;
  return 6.0 * displacement * (start + end - 2.0 * t) / (tau * tau * tau);
}

double horizon_lhs(const Coefficients& c, double displacement, double start, double end) {
  const double d = std::abs(displacement);
  const double tau = end - start;
  const double numer = 3.0 * c.alpha * d * tau * tau + 6.75 * std::sqrt(c.alpha * c.beta) * d * d * tau +
                       3.375 * c.beta * d * d * d + 6.0 * d * (end + start);
  return numer / (tau * tau * tau);
}

double choose_horizon(std::span<const double> displacements, std::span<const double> budgets,
                      const Coefficients& coeffs, double start, const HorizonOptions& options) {
  if (displacements.size() != budgets.size())
    throw DimensionError("horizon search: displacement and budget sizes differ");
  if (!(options.floor > 0.0) || !(options.cap >= options.floor) || !(options.safety > 0.0) ||
      !(options.rel_tol > 0.0))
    throw ParameterError("horizon search: invalid options");
  for (std::size_t l = 0; l < budgets.size(); ++l) {
    if (!(budgets[l] > 0.0)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "horizon search: non-positive control budget " << budgets[l] << " at node " << l;
      throw HorizonSearchError(msg.str());
    }
  }

  auto holds = [&](double duration) {
    const double end = start + duration;
    for (std::size_t l = 0; l < budgets.size(); ++l)
      if (!(horizon_lhs(coeffs, displacements[l], start, end) < options.safety * budgets[l]))
        return false;
    return true;
  };

  double lo = options.floor;
  if (holds(lo)) return start + lo;
  double hi = lo;
  do {
    lo = hi;
    hi = std::min(2.0 * hi, options.cap);
    if (holds(hi)) break;
    if (hi >= options.cap) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "horizon search: no duration up to the cap " << options.cap
          << " satisfies the control budget (start = " << start << ")";
      throw HorizonSearchError(msg.str());
    }
  } while (true);

  while (hi - lo > options.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid))
      hi = mid;
    else
      lo = mid;
  }
  return start + hi;
}

double rendezvous_horizon(std::span<const double> displacements, const Params& params, double eps,
                          double start, const HorizonOptions& options) {
  const std::vector<double> budgets(displacements.size(), params.bound() - eps);
  return choose_horizon(displacements, budgets, params.coefficients(), start, options);
}

double retarget_horizon(std::span<const double> displacements,
                        std::span<const double> target_laplacian, const Params& params,
                        double start, const HorizonOptions& options) {
  if (displacements.size() != target_laplacian.size())
    throw DimensionError("retarget horizon: size mismatch");
  std::vector<double> budgets(displacements.size());
  for (std::size_t l = 0; l < budgets.size(); ++l)
    budgets[l] = params.bound() - std::abs(target_laplacian[l]);
  return choose_horizon(displacements, budgets, params.coefficients(), start, options);
}

}  // namespace kgflock
