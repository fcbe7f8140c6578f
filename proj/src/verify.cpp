#include "kgflock/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kgflock/error.hpp"

namespace kgflock {
namespace {

std::string describe(const char* what, double t, std::size_t node, double value) {
  std::ostringstream out;
  out.precision(17);
  out << what << " at t=" << t << " node=" << node << " value=" << value;
  return out.str();
}

}  // namespace

std::string format_report(const CertificateReport& r) {
  std::string out;
  out += "certificate: " + r.name + "\n";
  out += std::string("status: ") + (r.passed ? "pass" : "fail") + "\n";
  out += "worst_margin: " + format_double(r.worst_margin) + "\n";
  out += "worst_time: " + (r.worst_time ? format_double(*r.worst_time) : std::string("none")) + "\n";
  out += "worst_node: " + (r.worst_node ? std::to_string(*r.worst_node) : std::string("none")) + "\n";
  out += "checked: " + std::to_string(r.checked) + "\n";
  out += "violations: " + std::to_string(r.violations) + "\n";
  out += "witness: " + (r.witness.empty() ? std::string("none") : r.witness) + "\n";
  return out;
}

CertificateReport check_control_bound(const Trajectory& trajectory, double bound) {
  CertificateReport report;
  report.name = "control_bound";
  report.worst_margin = bound;
  double worst = -1.0;
  for (std::size_t row = 0; row < trajectory.size(); ++row) {
    const auto u = trajectory.u(row);
    for (std::size_t l = 0; l < u.size(); ++l) {
      ++report.checked;
      const double mag = std::abs(u[l]);
      const bool ok = mag <= bound;
      if (!ok) ++report.violations;
      if (mag > worst || std::isnan(mag)) {
        worst = std::isnan(mag) ? std::numeric_limits<double>::infinity() : mag;
        report.worst_margin = bound - worst;
        report.worst_time = trajectory.time(row);
        report.worst_node = l;
        report.witness = describe("max |u|", trajectory.time(row), l, u[l]);
      }
    }
  }
  report.passed = report.violations == 0;
  return report;
}

CertificateReport check_lyapunov_monotone(const Lattice& lattice, const Trajectory& trajectory,
                                          Phase window, double slack) {
  CertificateReport report;
  report.name = "lyapunov_monotone";
  report.worst_margin = slack;
  double prev = 0.0;
  for (std::size_t row = 0; row + 1 < trajectory.size(); ++row) {
    if (trajectory.phase(row) != window) continue;
    const double v0 = (row > 0 && trajectory.phase(row - 1) == window)
                          ? prev
                          : lyapunov(lattice, trajectory.state(row));
    const double v1 = lyapunov(lattice, trajectory.state(row + 1));
    prev = v1;
    ++report.checked;
    const double margin = slack - (v1 - v0);
    if (!(margin >= 0.0)) ++report.violations;
    if (report.checked == 1 || margin < report.worst_margin) {
      report.worst_margin = margin;
      report.worst_time = trajectory.time(row + 1);
      report.worst_node.reset();
      std::ostringstream w;
      w.precision(17);
      w << "V(" << trajectory.time(row) << ")=" << v0 << " -> V(" << trajectory.time(row + 1)
        << ")=" << v1;
      report.witness = w.str();
    }
  }
  report.passed = report.violations == 0;
  return report;
}

DissipationConstants dissipation_certificate(const Params& params) {
  const double a1 = params.low_speed();
  const double a2 = params.high_speed();
  const double g = params.gamma();
  const DissipationConstants c{a1 * (params.bound() - cubic_peak(params.alpha(), params.beta())),
                               (g * g - 1.0) * params.alpha() * a2 * a2};
  if (!(c.c1 > 0.0) || !(c.c2 > 0.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "dissipation constants must be positive: C1 = " << c.c1 << ", C2 = " << c.c2;
    throw ParameterError(msg.str());
  }
  return c;
}

double dissipation_margin(const Lattice& lattice, const Params& params, DampingVariant variant,
                          const State& state) {
  require_state(lattice, state);
  const DissipationConstants c = dissipation_certificate(params);
  NodeField u(lattice.size());
  for (std::size_t l = 0; l < u.size(); ++l) u[l] = damping_control(params, variant, state.v[l]);
  double bound = 0.0;
  for (std::size_t l = 0; l < u.size(); ++l) {
    const double v = state.v[l];
    switch (classify_speed(params, v)) {
      case SpeedBand::I2: bound -= c.c2; break;
      case SpeedBand::I1: bound -= c.c1; break;
      case SpeedBand::I0: {
        const double term = (params.alpha() - params.beta() * v * v) * v * v + u[l] * v;
        if (term > 0.0) return -std::numeric_limits<double>::infinity();
        break;
      }
    }
  }
  return bound - lyapunov_rate(lattice, params.coefficients(), state, u);
}

CertificateReport check_dissipation(const Lattice& lattice, const Params& params,
                                    DampingVariant variant, const Trajectory& trajectory,
                                    double slack) {
  CertificateReport report;
  report.name = "dissipation";
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t row = 0; row < trajectory.size(); ++row) {
    if (trajectory.phase(row) != Phase::Damp) continue;
    const double margin = dissipation_margin(lattice, params, variant, trajectory.state(row));
    ++report.checked;
    if (!(margin >= -slack)) ++report.violations;
    if (margin < report.worst_margin) {
      report.worst_margin = margin;
      report.worst_time = trajectory.time(row);
      std::ostringstream w;
      w.precision(17);
      w << "bound - dV/dt = " << margin << " at t=" << trajectory.time(row);
      report.witness = w.str();
    }
  }
  if (report.checked == 0) report.worst_margin = 0.0;
  report.passed = report.violations == 0;
  return report;
}

CertificateReport check_freeze_drift(const PhaseSchedule& schedule) {
  CertificateReport report;
  report.name = "freeze_drift";
  if (!schedule.at_T0 || !schedule.at_T1) {
    report.passed = false;
    report.witness = "schedule lacks T0/T1 snapshots";
    return report;
  }
  const auto& x0 = schedule.at_T0->x;
  const auto& x1 = schedule.at_T1->x;
  const double limit = 2.0 * schedule.epsilon;
  report.worst_margin = limit;
  for (std::size_t l = 0; l < x0.size(); ++l) {
    ++report.checked;
    const double drift = std::abs(x1[l] - x0[l]);
    const double margin = limit - drift;
    if (!(margin > 0.0)) ++report.violations;
    if (margin < report.worst_margin || report.checked == 1) {
      report.worst_margin = margin;
      report.worst_node = l;
      report.worst_time = schedule.at_T1->t;
      report.witness = describe("|x(T1) - x(T0)|", schedule.at_T1->t, l, drift);
    }
  }
  report.passed = report.violations == 0;
  return report;
}

FlockStatus detect_flock(const Lattice& lattice, const Params& params, const State& state,
                         const FlockTarget* target, double tol) {
  require_state(lattice, state);
  FlockStatus status;
  const double speed = params.flock_speed();

  auto residual = [&](double g) {
    double worst = 0.0;
    for (double v : state.v) worst = std::max(worst, std::abs(v - g));
    return worst;
  };
  const double up = residual(speed);
  const double down = residual(-speed);
  const double rest = residual(0.0);
  if (up < tol) {
    status.motion = FlockMotion::Moving;
    status.group_velocity = speed;
    status.velocity_residual = up;
  } else if (down < tol) {
    status.motion = FlockMotion::Moving;
    status.group_velocity = -speed;
    status.velocity_residual = down;
  } else if (rest < tol) {
    status.motion = FlockMotion::Stationary;
    status.velocity_residual = rest;
  } else {
    const double best = std::min({up, down, rest});
    status.velocity_residual = best;
    status.group_velocity = best == rest ? 0.0 : (best == up ? speed : -speed);
  }

  if (!target) {
    status.is_flock = status.motion != FlockMotion::None;
    return status;
  }
  require_size(lattice, target->shape, "target shape");
  const std::size_t n = lattice.size();
  double group = status.group_velocity;
  if (target->kind == FlockKind::Stationary) group = 0.0;
  else if (status.motion != FlockMotion::Moving) group = speed;

  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t l = 0; l < n; ++l) {
    const double r = state.x[l] - target->shape[l];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    sum += r - group * state.t;
  }
  const double a = sum / static_cast<double>(n);
  double worst = 0.0;
  for (std::size_t l = 0; l < n; ++l)
    worst = std::max(worst, std::abs(state.x[l] - target->shape[l] - group * state.t - a));
  status.offset = a;
  status.shape_residual = worst;
  status.shape_spread = hi - lo;

  const bool kind_ok = target->kind == FlockKind::Stationary
                           ? status.motion == FlockMotion::Stationary
                           : status.motion == FlockMotion::Moving;
  status.is_flock = kind_ok && status.shape_spread < tol;
  return status;
}

CertificateReport compatibility_check(const Lattice& lattice, double bound,
                                      std::span<const double> shape, bool strict) {
  CertificateReport report;
  report.name = strict ? "compatibility_strict" : "compatibility";
  const NodeField lap = discrete_laplacian(lattice, shape);
  report.worst_margin = bound;
  for (std::size_t l = 0; l < lap.size(); ++l) {
    ++report.checked;
    const double mag = std::abs(lap[l]);
    const double margin = bound - mag;
    const bool ok = strict ? margin > 0.0 : margin >= 0.0;
    if (!ok) ++report.violations;
    if (margin < report.worst_margin || report.checked == 1) {
      report.worst_margin = margin;
      report.worst_node = l;
      report.witness = describe("|Delta phi|", 0.0, l, mag);
    }
  }
  report.passed = report.violations == 0;
  return report;
}

}  // namespace kgflock
