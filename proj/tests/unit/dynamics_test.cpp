#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kgflock/dynamics.hpp"
#include "kgflock/error.hpp"
#include "oracles.hpp"

using namespace kgflock;

namespace {

NodeField random_field(std::size_t n, std::uint64_t seed, double amp = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  NodeField f(n);
  for (double& x : f) x = dist(rng);
  return f;
}

const Params kUnit = Params::create(1.0, 1.0, 1.0);

}  // namespace

TEST(Params, DerivedSpeeds) {
  EXPECT_EQ(kUnit.gamma(), 2.0);
  EXPECT_EQ(kUnit.low_speed(), 0.5);
  EXPECT_EQ(kUnit.high_speed(), 2.0);
  EXPECT_EQ(kUnit.flock_speed(), 1.0);
  const Params p = Params::create(2.0, 0.5, 3.0, 3.5);
  EXPECT_LT(p.low_speed(), p.flock_speed());
  EXPECT_LT(p.flock_speed(), p.high_speed());
  EXPECT_NEAR(p.low_speed() * p.high_speed(), p.alpha() / p.beta(), 1e-14);
}

TEST(Params, DefaultGammaScalesWithCubicRatio) {
  EXPECT_EQ(Params::default_gamma(4.0, 1.0, 4.0), 4.0);
  EXPECT_EQ(Params::create(4.0, 1.0, 4.0).gamma(), 4.0);
}

TEST(Params, CubicPeakConstant) {
  EXPECT_NEAR(cubic_peak(1.0, 1.0), oracle::kCubicPeakUnit, 1e-16);
  EXPECT_NEAR(cubic_peak_speed(3.0, 1.0), 1.0, 1e-16);
}

TEST(Params, RejectsBoundAtOrBelowCubicPeak) {
  EXPECT_THROW(Params::create(1.0, 1.0, cubic_peak(1.0, 1.0)), ParameterError);
  try {
    Params::create(1.0, 1.0, 0.3);
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("0.3"), std::string::npos);
    EXPECT_NE(msg.find("0.3849"), std::string::npos);
  }
}

TEST(Params, RejectsSmallGammaAndBadCoefficients) {
  EXPECT_THROW(Params::create(1.0, 1.0, 1.0, 1.0), ParameterError);
  EXPECT_THROW(Params::create(4.0, 1.0, 4.0, 1.5), ParameterError);  // needs gamma > 2
  EXPECT_THROW(Params::create(0.0, 1.0, 1.0), ParameterError);
  EXPECT_THROW(Params::create(1.0, -1.0, 1.0), ParameterError);
}

TEST(Drift, EquilibriumAndMovingFlock) {
  const Lattice lat(1, 4);
  const NodeField zero(4, 0.0);
  const Derivative rest = drift(lat, kUnit.coefficients(), State{0, NodeField(4, 0.7), zero}, zero);
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_EQ(rest.dx[l], 0.0);
    EXPECT_EQ(rest.dv[l], 0.0);
  }
  const Derivative moving = drift(lat, kUnit.coefficients(), State{0, NodeField(4, 0.7), NodeField(4, 1.0)}, zero);
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_EQ(moving.dx[l], 1.0);
    EXPECT_EQ(moving.dv[l], 0.0);
  }
}

TEST(Drift, TwoNodeStencil) {
  const Lattice lat(1, 2);
  const Derivative d = drift(lat, kUnit.coefficients(), State{0, {0, 1}, {0, 0}}, NodeField{0, 0});
  EXPECT_EQ(d.dv[0], 8.0);
  EXPECT_EQ(d.dv[1], -8.0);
}

TEST(Drift, MatchesOracle) {
  const Lattice lat(2, 3);
  const Coefficients c{1.3, 0.4};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const State s{0, random_field(9, seed), random_field(9, seed + 100)};
    const NodeField u = random_field(9, seed + 200, 0.5);
    const Derivative d = drift(lat, c, s, u);
    for (std::size_t l = 0; l < 9; ++l) {
      const double v = s.v[l];
      EXPECT_EQ(d.dx[l], v);
      EXPECT_NEAR(d.dv[l], oracle::laplacian(2, 3, s.x, l) + (c.alpha - c.beta * v * v) * v + u[l], 1e-12);
    }
  }
}

TEST(Drift, OddSymmetryExact) {
  const Lattice lat(1, 8);
  const State s{0, random_field(8, 1), random_field(8, 2)};
  const NodeField u = random_field(8, 3, 0.9);
  State neg = s;
  NodeField nu = u;
  for (std::size_t l = 0; l < 8; ++l) {
    neg.x[l] = -s.x[l];
    neg.v[l] = -s.v[l];
    nu[l] = -u[l];
  }
  const Derivative a = drift(lat, kUnit.coefficients(), s, u), b = drift(lat, kUnit.coefficients(), neg, nu);
  for (std::size_t l = 0; l < 8; ++l) {
    EXPECT_EQ(b.dx[l], -a.dx[l]);
    EXPECT_EQ(b.dv[l], -a.dv[l]);
  }
}

TEST(Drift, TranslationLeavesDerivativeUnchanged) {
  const Lattice lat(1, 8);
  const State s{0, random_field(8, 4), random_field(8, 5)};
  State shifted = s;
  for (double& x : shifted.x) x += 0.3;
  const NodeField zero(8, 0.0);
  const Derivative a = drift(lat, kUnit.coefficients(), s, zero), b = drift(lat, kUnit.coefficients(), shifted, zero);
  for (std::size_t l = 0; l < 8; ++l) {
    EXPECT_EQ(a.dx[l], b.dx[l]);
    EXPECT_NEAR(a.dv[l], b.dv[l], 1e-12);
  }
}

TEST(Drift, SizeMismatchIsDimensionError) {
  const Lattice lat(1, 4);
  EXPECT_THROW(drift(lat, kUnit.coefficients(), State{0, NodeField(3), NodeField(4)}, NodeField(4)), DimensionError);
  EXPECT_THROW(drift(lat, kUnit.coefficients(), State{0, NodeField(4), NodeField(4)}, NodeField(2)), DimensionError);
}

TEST(Step, FixedPointOnlyAdvancesTime) {
  const Lattice lat(2, 2);
  const State s{1.5, NodeField(4, -0.25), NodeField(4, 0.0)};
  const State next = step(lat, kUnit.coefficients(), s, {}, 0.01);
  EXPECT_EQ(next.x, s.x);
  EXPECT_EQ(next.v, s.v);
  EXPECT_DOUBLE_EQ(next.t, 1.51);
}

TEST(Step, RejectsNonPositiveStep) {
  const Lattice lat(1, 2);
  EXPECT_THROW(step(lat, kUnit.coefficients(), State{0, {0, 0}, {0, 0}}, {}, 0.0), ParameterError);
}

TEST(Step, LinearPairOscillatesWithFrequencyFour) {
  // x0 = -x1 relative to the mean; the difference obeys d'' = -16 d.
  const Lattice lat(1, 2);
  const double xi = 0.3;
  const int steps = 1571;
  const double period = std::numbers::pi / 2.0;
  const double dt = period / steps;
  State s{0, {0, xi}, {0, 0}};
  Rk4Integrator rk(lat, Coefficients{0, 0});
  for (int k = 0; k < steps; ++k) rk.step(s, {}, dt);
  EXPECT_NEAR(s.x[1] - s.x[0], xi, 1e-6);
  EXPECT_NEAR(s.v[1] - s.v[0], 0.0, 1e-6);
  EXPECT_NEAR(s.x[0] + s.x[1], xi, 1e-12);
}

TEST(Step, FourthOrderConvergence) {
  const Lattice lat(1, 8);
  const State init{0, random_field(8, 9, 0.5), random_field(8, 10, 0.5)};
  auto solve = [&](double dt, double T) {
    State s = init;
    Rk4Integrator rk(lat, Coefficients{0, 0});
    const int n = static_cast<int>(std::lround(T / dt));
    for (int k = 0; k < n; ++k) rk.step(s, {}, dt);
    return s;
  };
  const double T = 1.0;
  const State ref = solve(1e-6, T);
  auto err = [&](double dt) {
    const State s = solve(dt, T);
    double e = 0.0;
    for (std::size_t l = 0; l < 8; ++l) e = std::max({e, std::abs(s.x[l] - ref.x[l]), std::abs(s.v[l] - ref.v[l])});
    return e;
  };
  // h * omega_max must be small enough for the asymptotic regime (omega_max = 16 here).
  const double order = std::log2(err(0.005) / err(0.0025));
  EXPECT_GE(order, 3.9);
}

TEST(Step, AdmissibilityViolationCarriesWitness) {
  const Lattice lat(1, 4);
  const ControlLaw law = [](double, const State&, std::span<double> u) { u[2] = 1.25; };
  Rk4Integrator rk(lat, kUnit.coefficients(), 1.0);
  State s{0.5, NodeField(4, 0.0), NodeField(4, 0.0)};
  try {
    rk.step(s, law, 1e-3);
    FAIL() << "expected AdmissibilityError";
  } catch (const AdmissibilityError& e) {
    EXPECT_EQ(e.node(), 2u);
    EXPECT_EQ(e.value(), 1.25);
    EXPECT_EQ(e.bound(), 1.0);
    EXPECT_EQ(e.time(), 0.5);
  }
}

TEST(Lyapunov, Examples) {
  EXPECT_EQ(lyapunov(Lattice(1, 4), State{0, NodeField(4, 3.0), NodeField(4, 0.0)}), 0.0);
  EXPECT_EQ(lyapunov(Lattice(1, 2), State{0, {0, 1}, {0, 0}}), 4.0);
  EXPECT_DOUBLE_EQ(lyapunov(Lattice(2, 3), State{0, NodeField(9, 1.0), NodeField(9, 0.4)}), 0.5 * 9 * 0.16);
}

TEST(Lyapunov, MatchesOracleAndIsNonNegative) {
  const Lattice lat(2, 4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const State s{0, random_field(16, seed), random_field(16, seed + 50)};
    const double v = lyapunov(lat, s);
    EXPECT_GE(v, 0.0);
    EXPECT_NEAR(v, oracle::lyapunov(2, 4, s.x, s.v), 1e-12 * v);
  }
}

TEST(LyapunovRate, Examples) {
  const Lattice one(1, 1);
  EXPECT_EQ(lyapunov_rate(one, kUnit.coefficients(), State{0, {0}, {1.0}}, NodeField{0}), 0.0);
  const Lattice lat(1, 4);
  EXPECT_EQ(lyapunov_rate(lat, kUnit.coefficients(), State{0, random_field(4, 1), NodeField(4, 0.0)},
                          random_field(4, 2)),
            0.0);
}

TEST(LyapunovRate, MatchesCentralDifference) {
  // Central-difference error is O(dt^2) with a constant set by the fastest
  // lattice frequency 2 sqrt(n) D, so the bound scales with V omega^3.
  const Lattice lat(1, 8);
  const double omega = 2.0 * 8.0;
  const ControlLaw law = [](double, const State& s, std::span<double> u) {
    for (std::size_t l = 0; l < u.size(); ++l) u[l] = -0.5 * std::tanh(s.v[l]);
  };
  const State init{0, random_field(8, 3), random_field(8, 4)};
  const double scale = lyapunov(lat, init) * omega * omega * omega;
  auto check = [&](double dt) {
    Rk4Integrator rk(lat, kUnit.coefficients(), kUnit.bound());
    State s = init;
    for (int k = 0; k < 50; ++k) {
      const State a = s;
      rk.step(s, law, dt);
      const State mid = s;
      rk.step(s, law, dt);
      const double fd = (lyapunov(lat, s) - lyapunov(lat, a)) / (2 * dt);
      NodeField u(8, 0.0);
      law(mid.t, mid, u);
      EXPECT_NEAR(fd, lyapunov_rate(lat, kUnit.coefficients(), mid, u), 10 * dt * dt * scale);
    }
  };
  check(1e-3);
  check(1e-4);
}
