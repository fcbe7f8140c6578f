#pragma once

#include <optional>
#include <span>
#include <vector>

#include "kgflock/dynamics.hpp"
#include "kgflock/trajectory.hpp"

namespace kgflock {

// ---------------------------------------------------------------------------
// Targets and schedule

enum class FlockKind { Moving, Stationary };

/// Target shape phi with the strict budget condition max_l |Delta phi(l)| < M.
struct FlockTarget {
  FlockKind kind = FlockKind::Moving;
  NodeField shape;

  /// Throws ParameterError (with the worst node) if the shape is not strictly compatible.
  static FlockTarget create(const Lattice& lattice, double bound, FlockKind kind, NodeField shape);
};

/// Switching times, snapshots and derived constants of one mission.
struct PhaseSchedule {
  Phase phase = Phase::Damp;
  double epsilon = 0.0;
  /// Signed group velocity the mission steers to (0 for stationary targets).
  double flock_speed = 0.0;
  std::optional<double> T0, T1, T2, T3, T4;
  /// Per-node end of the deceleration ramp, T0 + |v_l(T0)| / epsilon.
  NodeField T1l;
  std::optional<State> at_T0, at_T1, at_T2, at_T3, at_T4;
  double y_bar = 0.0;
};

// ---------------------------------------------------------------------------
// Damping phase

enum class DampingVariant { Standard, Simple };
enum class SpeedBand { I0, I1, I2 };

/// Standard damping feedback: 0 above 2 a2, linear roll-off on (a2, 2 a2),
/// -M sign(v) on [a1, a2], -M v / a1 below a1.
double phase1_control(const Params& params, double v);
/// Saturating variant: -M sign(v) for |v| >= a1, -M v / a1 below.
double phase1_control_simple(const Params& params, double v);
double damping_control(const Params& params, DampingVariant variant, double v);
/// Field version through the active SIMD kernel set.
void damping_control(const Params& params, DampingVariant variant, std::span<const double> v,
                     std::span<double> u);

/// I2 if |v| > a2, I1 if a1 <= |v| <= a2, I0 otherwise.
SpeedBand classify_speed(const Params& params, double v);

/// min{1, M / (2n + 1 + 8n/h^2 + 2 alpha + 8 beta)}; epsilon must lie strictly below.
double epsilon_bound(const Lattice& lattice, const Params& params);

/// max_l |v_l| < eps and max_l |Delta x(l)| < eps.
bool phase1_done(const Lattice& lattice, const State& state, double eps);
/// Same test with separate speed and Laplacian thresholds.
bool phase1_done(const Lattice& lattice, const State& state, double speed_tol,
                 double laplacian_tol);

/// Speed threshold the mission uses to detect the end of damping, chosen so the
/// deceleration ramp keeps max_l |Delta x| <= eps through T1 (see run_mission).
double damping_exit_speed(const Lattice& lattice, double eps);

// ---------------------------------------------------------------------------
// Feedback-linearising laws. Each writes u for (state, t) given the schedule.

/// Deceleration ramp: reference acceleration -eps sign(v_l(T0)) while t <= T1l,
/// then 0; cancels the lattice and on-site terms at the measured state.
void phase2_control(const Lattice& lattice, const Params& params, const PhaseSchedule& schedule,
                    const State& state, double t, std::span<double> u);

/// Uniform acceleration sign(flock_speed) M/2 from rest.
void phase3_control(const Lattice& lattice, const Params& params, const PhaseSchedule& schedule,
                    const State& state, double t, std::span<double> u);

/// Cubic blend from x(T2) to the common point y_bar over [T2, T3].
void rendezvous_control(const Lattice& lattice, const Params& params,
                        const PhaseSchedule& schedule, const State& state, double t,
                        std::span<double> u);

/// Cubic blend from the common point x(T3) to the target shape over [T3, T4].
void retarget_control(const Lattice& lattice, const Params& params, const PhaseSchedule& schedule,
                      const FlockTarget& target, const State& state, double t,
                      std::span<double> u);

/// u = -Delta x: cancels the coupling so the shape and group velocity freeze.
void hold_control(const Lattice& lattice, const State& state, std::span<double> u);

/// Cubic Hermite blend of a displacement d over [start, end]:
/// offset (3s^2 - 2s^3) d, velocity 6 d (t-start)(end-t)/tau^3,
/// acceleration 6 d (start+end-2t)/tau^3 with tau = end - start.
struct CubicBlend {
  double start;
  double end;
  double displacement;

  double offset(double t) const;
  double velocity(double t) const;
  double acceleration(double t) const;
};

// ---------------------------------------------------------------------------
// Horizon selection

struct HorizonOptions {
  double floor = 1.0;    // minimum duration
  double cap = 1.0e4;    // maximum duration
  double safety = 0.9;   // multiplies each node's budget
  double rel_tol = 1.0e-6;
};

/// Left side of the blend budget inequality for one node:
/// [3 alpha |d| tau^2 + 6.75 sqrt(alpha beta) d^2 tau + 3.375 beta |d|^3
///  + 6 |d| (end + start)] / tau^3.
double horizon_lhs(const Coefficients& coeffs, double displacement, double start, double end);

/// Smallest end time (doubling, then bisection to rel_tol) with
/// horizon_lhs(d_l) < safety * budget_l for all l. Throws HorizonSearchError
/// if a budget is non-positive or no duration up to the cap works.
double choose_horizon(std::span<const double> displacements, std::span<const double> budgets,
                      const Coefficients& coeffs, double start, const HorizonOptions& options);

/// Rendezvous: budget M - eps at every node.
double rendezvous_horizon(std::span<const double> displacements, const Params& params, double eps,
                          double start, const HorizonOptions& options);
/// Retarget: budget M - |Delta phi(l)| at node l.
double retarget_horizon(std::span<const double> displacements,
                        std::span<const double> target_laplacian, const Params& params,
                        double start, const HorizonOptions& options);

}  // namespace kgflock
