#include "kgflock/mission.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "kgflock/error.hpp"

namespace kgflock {

double default_epsilon(const Lattice& lattice, const Params& params) {
  return 0.5 * epsilon_bound(lattice, params);
}

namespace {

class MissionRunner {
 public:
  MissionRunner(const Lattice& lattice, const Params& params, const State& initial,
                const MissionOptions& options)
      : lattice_(lattice),
        params_(params),
        options_(options),
        integrator_(lattice, params.coefficients(), params.bound()),
        state_(initial),
        prev_x_(lattice.size()),
        prev_v_(lattice.size()),
        snap_(1.0e-9 * options.dt) {
    result_.trajectory = Trajectory(lattice.size());
    current_v_ = lyapunov(lattice_, state_);
  }

  State& state() { return state_; }
  MissionResult& result() { return result_; }

  /// Advances under `law` until `stop` holds or t reaches t_end (snapped exactly).
  /// Returns true if stopped by the predicate.
  template <class Stop>
  bool run_phase(Phase phase, double t_end, std::vector<double> breaks, const ControlLaw& law,
                 Stop&& stop) {
    result_.schedule.phase = phase;
    std::sort(breaks.begin(), breaks.end());
    PhaseStats stats{phase, state_.t, state_.t, current_v_, current_v_, 0};
    bool first = true;
    bool stopped = false;
    std::size_t next_break = 0;

    const ControlLaw tracked = [&](double t, const State& s, std::span<double> u) {
      law(t, s, u);
      for (double value : u) max_control_ = std::max(max_control_, std::abs(value));
    };

    while (true) {
      if (stop()) {
        stopped = true;
        break;
      }
      if (t_end - state_.t <= snap_) {
        state_.t = t_end;
        break;
      }
      double target = t_end;
      while (next_break < breaks.size() && breaks[next_break] <= state_.t + snap_) ++next_break;
      if (next_break < breaks.size()) target = std::min(target, breaks[next_break]);
      const bool lands = target - state_.t <= options_.dt + snap_;
      const double h = lands ? target - state_.t : options_.dt;

      const double t0 = state_.t;
      std::copy(state_.x.begin(), state_.x.end(), prev_x_.begin());
      std::copy(state_.v.begin(), state_.v.end(), prev_v_.begin());
      const double prev_lyapunov = current_v_;
      branch_time_ = t0 + 0.5 * h;

      integrator_.step(state_, tracked, h);
      if (lands) state_.t = target;

      if (first || step_index_ % options_.record_stride == 0)
        result_.trajectory.append(t0, phase, prev_x_, prev_v_, integrator_.first_stage_control(),
                                  prev_lyapunov);
      first = false;
      ++step_index_;
      ++stats.steps;
      current_v_ = lyapunov(lattice_, state_);
      stats.v_min = std::min(stats.v_min, current_v_);
      stats.v_max = std::max(stats.v_max, current_v_);
    }
    stats.t_end = state_.t;
    result_.phases.push_back(stats);
    return stopped;
  }

  double branch_time() const { return branch_time_; }

  void finish(const ControlLaw& final_law, Phase final_phase) {
    NodeField u(lattice_.size(), 0.0);
    final_law(state_.t, state_, u);
    require_admissible(u, params_.bound(), state_.t);
    for (double value : u) max_control_ = std::max(max_control_, std::abs(value));
    result_.trajectory.append(state_.t, final_phase, state_.x, state_.v, u, current_v_);
    result_.max_control = max_control_;
    result_.final_state = state_;
  }

 private:
  const Lattice& lattice_;
  const Params& params_;
  const MissionOptions& options_;
  Rk4Integrator integrator_;
  State state_;
  NodeField prev_x_, prev_v_;
  double snap_;
  double current_v_ = 0.0;
  double branch_time_ = 0.0;
  double max_control_ = 0.0;
  std::size_t step_index_ = 0;
  MissionResult result_;
};

void validate(const Lattice& lattice, const State& initial, const std::optional<FlockTarget>& target,
              const MissionOptions& options, double eps, double eps_max, const Params& params) {
  require_state(lattice, initial);
  if (!(options.dt > 0.0) || !std::isfinite(options.dt)) throw ParameterError("dt must be positive");
  if (!(options.phase1_timeout > 0.0)) throw ParameterError("phase1_timeout must be positive");
  if (!(options.hold_time >= 0.0)) throw ParameterError("hold_time must be non-negative");
  if (options.record_stride == 0) throw ParameterError("record_stride must be >= 1");
  if (options.direction != 1 && options.direction != -1)
    throw ParameterError("direction must be +1 or -1");
  if (!(eps > 0.0 && eps < eps_max)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "epsilon must satisfy 0 < epsilon < min{1, M/(2n+1+8n/h^2+2alpha+8beta)} = " << eps_max
        << ", got " << eps;
    throw ParameterError(msg.str());
  }
  const bool needs_target = options.kind != MissionKind::Flock;
  if (needs_target && !target) throw ParameterError("mission requires a target shape");
  if (target) {
    const FlockKind want =
        options.kind == MissionKind::StationaryTarget ? FlockKind::Stationary : FlockKind::Moving;
    if (needs_target && target->kind != want)
      throw ParameterError("target kind does not match the mission");
    // Re-validate: the struct is public and may have been filled by hand.
    FlockTarget::create(lattice, params.bound(), target->kind, target->shape);
  }
}

}  // namespace

MissionResult run_mission(const Lattice& lattice, const Params& params, const State& initial,
                          const std::optional<FlockTarget>& target, const MissionOptions& options) {
  const double eps_max = epsilon_bound(lattice, params);
  const double eps = options.epsilon.value_or(0.5 * eps_max);
  validate(lattice, initial, target, options, eps, eps_max, params);

  MissionRunner runner(lattice, params, initial, options);
  PhaseSchedule& sched = runner.result().schedule;
  sched.epsilon = eps;
  const bool moving = options.kind != MissionKind::StationaryTarget;
  sched.flock_speed = moving ? options.direction * params.flock_speed() : 0.0;
  State& s = runner.state();
  const std::size_t n = lattice.size();

  // Damp.
  const double exit_speed = damping_exit_speed(lattice, eps);
  const ControlLaw damp = [&](double, const State& st, std::span<double> u) {
    damping_control(params, options.variant, st.v, u);
  };
  const bool detected =
      runner.run_phase(Phase::Damp, s.t + options.phase1_timeout, {}, damp,
                       [&] { return phase1_done(lattice, s, exit_speed, 0.5 * eps); });
  if (!detected) {
    std::ostringstream msg;
    msg << "damping phase did not settle within " << options.phase1_timeout << " time units";
    throw Phase1TimeoutError(msg.str());
  }

  // Freeze: decelerate every node to rest at rate eps.
  sched.T0 = s.t;
  sched.at_T0 = s;
  sched.T1l.resize(n);
  for (std::size_t l = 0; l < n; ++l) sched.T1l[l] = s.t + std::abs(s.v[l]) / eps;
  sched.T1 = *std::max_element(sched.T1l.begin(), sched.T1l.end());
  const ControlLaw freeze = [&](double, const State& st, std::span<double> u) {
    phase2_control(lattice, params, sched, st, runner.branch_time(), u);
  };
  runner.run_phase(Phase::Freeze, *sched.T1, sched.T1l, freeze, [] { return false; });
  sched.at_T1 = s;

  // Accelerate to the group velocity.
  if (moving) {
    const double duration = 2.0 * std::sqrt(params.alpha()) / (params.bound() * std::sqrt(params.beta()));
    const ControlLaw accelerate = [&](double t, const State& st, std::span<double> u) {
      phase3_control(lattice, params, sched, st, t, u);
    };
    runner.run_phase(Phase::Accelerate, *sched.T1 + duration, {}, accelerate, [] { return false; });
  }
  sched.T2 = s.t;
  sched.at_T2 = s;

  const ControlLaw hold = [&](double, const State& st, std::span<double> u) {
    hold_control(lattice, st, u);
  };
  MissionResult& result = runner.result();

  if (options.kind == MissionKind::Flock) {
    runner.run_phase(Phase::Hold, *sched.T2 + options.hold_time, {}, hold, [] { return false; });
    runner.finish(hold, Phase::Hold);
    NodeField shape(n);
    for (std::size_t l = 0; l < n; ++l) shape[l] = sched.at_T2->x[l] - sched.flock_speed * *sched.T2;
    result.achieved = FlockTarget{FlockKind::Moving, std::move(shape)};
    result.offset = 0.0;
    return std::move(result);
  }

  // Rendezvous at a common point.
  const double lap_T2 = max_abs_laplacian(lattice, s.x);
  if (lap_T2 > eps) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "rendezvous requires max|Delta x(T2)| <= epsilon, got " << lap_T2 << " > " << eps;
    throw PreconditionError(msg.str());
  }
  if (options.meeting == MeetingPoint::Mean) {
    sched.y_bar = std::accumulate(s.x.begin(), s.x.end(), 0.0) / static_cast<double>(n);
  } else {
    const auto [lo, hi] = std::minmax_element(s.x.begin(), s.x.end());
    sched.y_bar = 0.5 * (*lo + *hi);
  }
  NodeField displacement(n);
  for (std::size_t l = 0; l < n; ++l) displacement[l] = sched.y_bar - s.x[l];
  sched.T3 = rendezvous_horizon(displacement, params, eps, *sched.T2, options.horizon);
  const ControlLaw rendezvous = [&](double t, const State& st, std::span<double> u) {
    rendezvous_control(lattice, params, sched, st, t, u);
  };
  runner.run_phase(Phase::Rendezvous, *sched.T3, {}, rendezvous, [] { return false; });
  sched.at_T3 = s;

  // Retarget onto the prescribed shape.
  const NodeField target_lap = discrete_laplacian(lattice, target->shape);
  for (std::size_t l = 0; l < n; ++l) displacement[l] = target->shape[l] - s.x[l];
  sched.T4 = retarget_horizon(displacement, target_lap, params, *sched.T3, options.horizon);
  const ControlLaw retarget = [&](double t, const State& st, std::span<double> u) {
    retarget_control(lattice, params, sched, *target, st, t, u);
  };
  runner.run_phase(Phase::Retarget, *sched.T4, {}, retarget, [] { return false; });
  sched.at_T4 = s;

  runner.run_phase(Phase::Hold, *sched.T4 + options.hold_time, {}, hold, [] { return false; });
  runner.finish(hold, Phase::Hold);
  result.achieved = *target;
  result.offset = -*sched.T3 * sched.flock_speed;
  return std::move(result);
}

}  // namespace kgflock
