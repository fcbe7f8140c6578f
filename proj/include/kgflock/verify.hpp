#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "kgflock/controller.hpp"
#include "kgflock/trajectory.hpp"

namespace kgflock {

/// Outcome of one certificate. A failing report always carries a witness.
struct CertificateReport {
  std::string name;
  bool passed = true;
  /// Signed slack of the worst sample; negative means violated.
  double worst_margin = 0.0;
  std::optional<double> worst_time;
  std::optional<std::size_t> worst_node;
  std::size_t checked = 0;
  std::size_t violations = 0;
  /// Human-readable description of the worst sample.
  std::string witness;
};

/// "key: value" lines, one report after another.
std::string format_report(const CertificateReport& report);

/// Every recorded |u| <= M.
CertificateReport check_control_bound(const Trajectory& trajectory, double bound);

/// V(t_{k+1}) - V(t_k) <= slack for consecutive rows whose first row is in `window`.
/// V is recomputed from the recorded positions and velocities.
CertificateReport check_lyapunov_monotone(const Lattice& lattice, const Trajectory& trajectory,
                                          Phase window = Phase::Damp, double slack = 1.0e-8);

struct DissipationConstants {
  double c1;  // a1 (M - cubic peak)
  double c2;  // (gamma^2 - 1) alpha a2^2
};

/// Throws ParameterError if either constant is not positive.
DissipationConstants dissipation_certificate(const Params& params);

/// -(#I2) C2 - (#I1) C1 - dV/dt under the damping law at this state; >= -slack certifies.
/// Also fails (returns -inf) if an I0 node has a positive contribution.
double dissipation_margin(const Lattice& lattice, const Params& params, DampingVariant variant,
                          const State& state);

/// dissipation_margin >= -slack at every Damp row of the trajectory.
CertificateReport check_dissipation(const Lattice& lattice, const Params& params,
                                    DampingVariant variant, const Trajectory& trajectory,
                                    double slack = 1.0e-12);

/// |x_l(T1) - x_l(T0)| < 2 eps for every node.
CertificateReport check_freeze_drift(const PhaseSchedule& schedule);

enum class FlockMotion { None, Stationary, Moving };

struct FlockStatus {
  bool is_flock = false;
  FlockMotion motion = FlockMotion::None;
  double group_velocity = 0.0;
  double velocity_residual = 0.0;   // max_l |v_l - group velocity|
  std::optional<double> offset;     // best-fit a, target given only
  double shape_residual = 0.0;      // max_l |x_l - phi(l) - v t - a|
  double shape_spread = 0.0;        // max over pairs of |(x_l - phi(l)) - (x_j - phi(j))|
};

/// Classifies the state as a moving (v = +-sqrt(alpha/beta)), stationary or no flock
/// within tol; with a target also fits the offset a = mean_l (x_l - phi(l) - v t).
FlockStatus detect_flock(const Lattice& lattice, const Params& params, const State& state,
                         const FlockTarget* target, double tol);

/// max_l |Delta phi(l)| < M (strict) or <= M.
CertificateReport compatibility_check(const Lattice& lattice, double bound,
                                      std::span<const double> shape, bool strict);

}  // namespace kgflock
