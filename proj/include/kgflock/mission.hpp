#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "kgflock/controller.hpp"
#include "kgflock/trajectory.hpp"

namespace kgflock {

enum class MissionKind {
  Flock,             // reach some moving flock
  MovingTarget,      // reach a prescribed moving flock shape
  StationaryTarget,  // reach a prescribed stationary flock shape
};

/// Where the rendezvous phase gathers the nodes.
enum class MeetingPoint {
  Mean,     // arithmetic mean of x(T2)
  Minimax,  // midrange of x(T2), minimising the largest displacement
};

struct MissionOptions {
  MissionKind kind = MissionKind::Flock;
  DampingVariant variant = DampingVariant::Standard;
  MeetingPoint meeting = MeetingPoint::Mean;
  std::optional<double> epsilon;  // default: half of epsilon_bound
  double dt = 1.0e-3;
  double phase1_timeout = 1.0e4;
  HorizonOptions horizon;
  double hold_time = 1.0;
  std::size_t record_stride = 1;
  /// +1 or -1: sign of the group velocity of moving flocks.
  int direction = 1;
};

struct PhaseStats {
  Phase phase;
  double t_begin = 0.0;
  double t_end = 0.0;
  double v_min = 0.0;  // Lyapunov extrema over the phase's step boundaries
  double v_max = 0.0;
  std::size_t steps = 0;
};

struct MissionResult {
  Trajectory trajectory;
  PhaseSchedule schedule;
  /// Offset a with x_l = phi(l) + a + v t once the flock is reached.
  double offset = 0.0;
  /// Flock shape reached: the target when one is given, else x(T2) - v T2.
  FlockTarget achieved;
  double max_control = 0.0;
  std::vector<PhaseStats> phases;
  State final_state;
};

/// Runs the phase machine Damp -> Freeze -> (Accelerate) -> [Rendezvous ->
/// Retarget] -> Hold. Steps are split so no RK4 step straddles a switching time.
///
/// Damping ends at the first step boundary where max|v| < damping_exit_speed(eps)
/// and max|Delta x| < eps/2; the deceleration ramp then moves each node by at most
/// v^2/(2 eps), which keeps max|Delta x| <= eps through T1 and T2.
MissionResult run_mission(const Lattice& lattice, const Params& params, const State& initial,
                          const std::optional<FlockTarget>& target, const MissionOptions& options);

/// Default epsilon for a lattice and parameter set (half the admissible bound).
double default_epsilon(const Lattice& lattice, const Params& params);

}  // namespace kgflock
