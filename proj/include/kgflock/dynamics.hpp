#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "kgflock/lattice.hpp"

namespace kgflock {

/// On-site nonlinearity (alpha - beta v^2) v. Unvalidated; alpha = beta = 0 is
/// the linear lattice.
struct Coefficients {
  double alpha = 0.0;
  double beta = 0.0;
};

/// max over v >= 0 of (alpha - beta v^2) v, i.e. (2/(3 sqrt 3)) sqrt(alpha^3/beta).
double cubic_peak(double alpha, double beta);
/// Argmax of the above, sqrt(alpha / (3 beta)).
double cubic_peak_speed(double alpha, double beta);

/// Validated physical and control constants.
///
/// Requires alpha, beta > 0, M above the cubic peak and
/// gamma > max{1, sqrt(alpha^3/beta)/M}. The speeds a1 = v/gamma,
/// a2 = gamma v and v = sqrt(alpha/beta) are derived.
class Params {
 public:
  /// Throws ParameterError naming the violated inequality with both sides.
  static Params create(double alpha, double beta, double bound, std::optional<double> gamma = {});

  /// 2 * max{1, sqrt(alpha^3/beta)/M}.
  static double default_gamma(double alpha, double beta, double bound);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double bound() const noexcept { return bound_; }
  double gamma() const noexcept { return gamma_; }
  double low_speed() const noexcept { return low_; }
  double high_speed() const noexcept { return high_; }
  double flock_speed() const noexcept { return flock_; }
  Coefficients coefficients() const noexcept { return {alpha_, beta_}; }

 private:
  Params() = default;
  double alpha_ = 0, beta_ = 0, bound_ = 0, gamma_ = 0, low_ = 0, high_ = 0, flock_ = 0;
};

struct State {
  double t = 0.0;
  NodeField x;
  NodeField v;
};

void require_state(const Lattice& lattice, const State& state);

struct Derivative {
  NodeField dx;
  NodeField dv;
};

/// dx = v, dv = Delta x + (alpha - beta v^2) v + u.
Derivative drift(const Lattice& lattice, const Coefficients& coeffs, const State& state,
                 std::span<const double> control);

/// Writes the control for stage time t and stage state into u (pre-zeroed).
using ControlLaw = std::function<void(double t, const State& stage, std::span<double> u)>;

/// Throws AdmissibilityError at the first node with |u| > bound or non-finite u.
void require_admissible(std::span<const double> control, double bound, double t);

/// Classical fixed-step RK4 with reusable scratch buffers.
///
/// The control law is evaluated at each of the four stages and checked
/// against the bound before use. An empty law means u = 0.
class Rk4Integrator {
 public:
  Rk4Integrator(const Lattice& lattice, Coefficients coeffs,
                double control_bound = std::numeric_limits<double>::infinity());

  void step(State& state, const ControlLaw& law, double dt);

  /// Control evaluated at the first stage of the last step, i.e. at (t_k, state_k).
  std::span<const double> first_stage_control() const noexcept { return u_[0]; }

  const Lattice& lattice() const noexcept { return lattice_; }
  double control_bound() const noexcept { return bound_; }

 private:
  void stage(const ControlLaw& law, double t, const State& s, std::size_t idx);

  Lattice lattice_;
  Coefficients coeffs_;
  double bound_;
  State work_;
  std::vector<double> kx_[4], kv_[4], u_[4];
};

/// One RK4 step; convenience wrapper over Rk4Integrator.
State step(const Lattice& lattice, const Coefficients& coeffs, const State& state,
           const ControlLaw& law, double dt,
           double control_bound = std::numeric_limits<double>::infinity());

/// V = 1/2 sum_l [ v_l^2 + 1/2 sum_{l'~l} (x_l' - x_l)^2 / h^2 ].
double lyapunov(const Lattice& lattice, const State& state);

/// dV/dt = sum_l [ (alpha - beta v_l^2) v_l^2 + u_l v_l ].
double lyapunov_rate(const Lattice& lattice, const Coefficients& coeffs, const State& state,
                     std::span<const double> control);

}  // namespace kgflock
