#include "kgflock/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kgflock/error.hpp"
#include "kgflock/simd/kernels.hpp"

namespace kgflock {

double cubic_peak(double alpha, double beta) {
  return 2.0 / (3.0 * std::sqrt(3.0)) * std::sqrt(alpha * alpha * alpha / beta);
}

double cubic_peak_speed(double alpha, double beta) { return std::sqrt(alpha / (3.0 * beta)); }

double Params::default_gamma(double alpha, double beta, double bound) {
  return 2.0 * std::max(1.0, std::sqrt(alpha * alpha * alpha / beta) / bound);
}

Params Params::create(double alpha, double beta, double bound, std::optional<double> gamma) {
  auto fail = [](const std::string& msg) { throw ParameterError(msg); };
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be a positive finite number");
  if (!(beta > 0.0) || !std::isfinite(beta)) fail("beta must be a positive finite number");
  if (!std::isfinite(bound)) fail("M must be finite");

  const double peak = cubic_peak(alpha, beta);
  if (!(bound > peak)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "control bound too small: need M > (2/(3*sqrt(3)))*sqrt(alpha^3/beta), got M = " << bound
        << " <= " << peak;
    fail(msg.str());
  }

  const double g = gamma.value_or(default_gamma(alpha, beta, bound));
  const double g_min = std::max(1.0, std::sqrt(alpha * alpha * alpha / beta) / bound);
  if (!(g > g_min) || !std::isfinite(g)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "gamma too small: need gamma > max{1, sqrt(alpha^3/beta)/M}, got gamma = " << g
        << " <= " << g_min;
    fail(msg.str());
  }

  Params p;
  p.alpha_ = alpha;
  p.beta_ = beta;
  p.bound_ = bound;
  p.gamma_ = g;
  p.flock_ = std::sqrt(alpha / beta);
  p.low_ = p.flock_ / g;
  p.high_ = g * p.flock_;
  return p;
}

void require_state(const Lattice& lattice, const State& state) {
  require_size(lattice, state.x, "positions");
  require_size(lattice, state.v, "velocities");
}

Derivative drift(const Lattice& lattice, const Coefficients& coeffs, const State& state,
                 std::span<const double> control) {
  require_state(lattice, state);
  require_size(lattice, control, "control");
  Derivative d{state.v, NodeField(lattice.size())};
  simd::kernels().acceleration(lattice.neighbor_table().data(), lattice.degree(), lattice.size(),
                               lattice.inv_spacing_sq(), coeffs.alpha, coeffs.beta,
                               state.x.data(), state.v.data(), control.data(), d.dv.data());
  return d;
}

void require_admissible(std::span<const double> control, double bound, double t) {
  for (std::size_t l = 0; l < control.size(); ++l) {
    const double u = control[l];
    if (!(std::abs(u) <= bound)) throw AdmissibilityError(t, l, u, bound);
  }
}

Rk4Integrator::Rk4Integrator(const Lattice& lattice, Coefficients coeffs, double control_bound)
    : lattice_(lattice), coeffs_(coeffs), bound_(control_bound) {
  const std::size_t n = lattice_.size();
  work_.x.resize(n);
  work_.v.resize(n);
  for (int i = 0; i < 4; ++i) {
    kx_[i].resize(n);
    kv_[i].resize(n);
    u_[i].assign(n, 0.0);
  }
}

void Rk4Integrator::stage(const ControlLaw& law, double t, const State& s, std::size_t idx) {
  auto& u = u_[idx];
  std::fill(u.begin(), u.end(), 0.0);
  if (law) {
    law(t, s, u);
    require_admissible(u, bound_, t);
  }
  std::copy(s.v.begin(), s.v.end(), kx_[idx].begin());
  simd::kernels().acceleration(lattice_.neighbor_table().data(), lattice_.degree(), lattice_.size(),
                               lattice_.inv_spacing_sq(), coeffs_.alpha, coeffs_.beta, s.x.data(),
                               s.v.data(), u.data(), kv_[idx].data());
}

void Rk4Integrator::step(State& state, const ControlLaw& law, double dt) {
  require_state(lattice_, state);
  if (!(dt > 0.0)) throw ParameterError("time step must be positive");
  const auto& k = simd::kernels();
  const std::size_t n = lattice_.size();
  const double t = state.t;

  stage(law, t, state, 0);

  work_.t = t + 0.5 * dt;
  k.axpy(n, 0.5 * dt, kx_[0].data(), state.x.data(), work_.x.data());
  k.axpy(n, 0.5 * dt, kv_[0].data(), state.v.data(), work_.v.data());
  stage(law, work_.t, work_, 1);

  k.axpy(n, 0.5 * dt, kx_[1].data(), state.x.data(), work_.x.data());
  k.axpy(n, 0.5 * dt, kv_[1].data(), state.v.data(), work_.v.data());
  stage(law, work_.t, work_, 2);

  work_.t = t + dt;
  k.axpy(n, dt, kx_[2].data(), state.x.data(), work_.x.data());
  k.axpy(n, dt, kv_[2].data(), state.v.data(), work_.v.data());
  stage(law, work_.t, work_, 3);

  k.rk4_combine(n, dt, state.x.data(), kx_[0].data(), kx_[1].data(), kx_[2].data(), kx_[3].data(),
                state.x.data());
  k.rk4_combine(n, dt, state.v.data(), kv_[0].data(), kv_[1].data(), kv_[2].data(), kv_[3].data(),
                state.v.data());
  state.t = t + dt;
}

State step(const Lattice& lattice, const Coefficients& coeffs, const State& state,
           const ControlLaw& law, double dt, double control_bound) {
  Rk4Integrator integrator(lattice, coeffs, control_bound);
  State next = state;
  integrator.step(next, law, dt);
  return next;
}

double lyapunov(const Lattice& lattice, const State& state) {
  require_state(lattice, state);
  return simd::kernels().lyapunov(lattice.neighbor_table().data(), lattice.degree(), lattice.size(),
                                  lattice.inv_spacing_sq(), state.x.data(), state.v.data());
}

double lyapunov_rate(const Lattice& lattice, const Coefficients& coeffs, const State& state,
                     std::span<const double> control) {
  require_state(lattice, state);
  require_size(lattice, control, "control");
  double rate = 0.0;
  for (std::size_t l = 0; l < lattice.size(); ++l) {
    const double v = state.v[l];
    rate += (coeffs.alpha - coeffs.beta * v * v) * v * v + control[l] * v;
  }
  return rate;
}

}  // namespace kgflock
