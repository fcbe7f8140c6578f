#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "kgflock/error.hpp"
#include "kgflock/hjb.hpp"
#include "oracles.hpp"

using namespace kgflock;

namespace {

const Params kUnit = Params::create(1.0, 1.0, 1.0);

const ValueField& single_node_field() {
  static const ValueField field = [] {
    const Lattice lat(1, 1);
    return value_iteration(default_grid(lat, kUnit, 201), kUnit);
  }();
  return field;
}

}  // namespace

TEST(MasterDrift, MatchesLatticeDrift) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (const auto& [n, D] : {std::pair{1, 2}, std::pair{1, 5}, std::pair{2, 3}}) {
    const Lattice lat(n, D);
    const Coefficients coeffs = kUnit.coefficients();
    for (int trial = 0; trial < 100; ++trial) {
      State s{0.0, NodeField(lat.size()), NodeField(lat.size())};
      NodeField u(lat.size());
      for (std::size_t l = 0; l < lat.size(); ++l) {
        s.x[l] = dist(rng);
        s.v[l] = dist(rng);
        u[l] = 0.5 * dist(rng);
      }
      const Derivative d = drift(lat, coeffs, s, u);
      const MasterState m = master_drift(lat, kUnit, MasterState{s.x, s.v}, u);
      for (std::size_t l = 0; l < lat.size(); ++l) {
        EXPECT_NEAR(m.x1[l], d.dx[l], 1e-15);
        EXPECT_NEAR(m.x2[l], d.dv[l], 1e-15 * std::max(1.0, std::abs(d.dv[l])));
      }
    }
  }
}

TEST(Hamiltonian, ZeroCostateGivesMinusOne) {
  const Lattice lat(1, 2);
  const MasterState X{NodeField{0.3, -0.1}, NodeField{0.7, 0.2}};
  EXPECT_EQ(hamiltonian(lat, kUnit, X, MasterState{NodeField(2, 0.0), NodeField(2, 0.0)}), -1.0);
}

TEST(Hamiltonian, ConstructedRootVanishes) {
  // Single node at rest: b = 0, so H = M |p| - 1 vanishes at p = 1/M.
  const Lattice lat(1, 1);
  const Params p = Params::create(1.0, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(hamiltonian(lat, p, MasterState{{0.0}, {0.0}}, MasterState{{0.0}, {0.5}}), 0.0);
}

TEST(Hamiltonian, EqualsMaxOverControlCorners) {
  const Lattice lat(1, 2);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const MasterState X{NodeField{dist(rng), dist(rng)}, NodeField{dist(rng), dist(rng)}};
    const MasterState P{NodeField{dist(rng), dist(rng)}, NodeField{dist(rng), dist(rng)}};
    double best = -INFINITY;
    for (double w0 : {-1.0, 1.0})
      for (double w1 : {-1.0, 1.0}) {
        const NodeField w{w0, w1};
        const MasterState f = master_drift(lat, kUnit, X, w);
        double dot = 0.0;
        for (std::size_t l = 0; l < 2; ++l) dot += f.x1[l] * P.x1[l] + f.x2[l] * P.x2[l];
        best = std::max(best, -dot - 1.0);
      }
    EXPECT_NEAR(hamiltonian(lat, kUnit, X, P), best, 1e-13);
  }
}

TEST(Target, MembershipExamples) {
  const Lattice lat(1, 2);
  EXPECT_TRUE(in_target(lat, kUnit, MasterState{{0.0, 0.0}, {1.0, 1.0}}));
  EXPECT_TRUE(in_target(lat, kUnit, MasterState{{0.05, -0.05}, {-1.0, -1.0}}));
  EXPECT_FALSE(in_target(lat, kUnit, MasterState{{0.0, 0.0}, {1.0, -1.0}}));
  EXPECT_FALSE(in_target(lat, kUnit, MasterState{{0.0, 0.0}, {1.0, 0.9}}));
  EXPECT_TRUE(in_target(lat, kUnit, MasterState{{0.0, 0.0}, {1.0, 0.9}}, 0.1));
  // |Delta X1| = 8 |x0 - x1| must stay within M.
  EXPECT_FALSE(in_target(lat, kUnit, MasterState{{0.2, -0.2}, {1.0, 1.0}}));
}

TEST(Grid, Validation) {
  const Lattice one(1, 1), two(1, 2), three(1, 3);
  EXPECT_THROW(ReducedGrid::create(three, kUnit, {GridAxis{-2, 2, 9}, GridAxis{-2, 2, 9}, GridAxis{-3, 3, 9},
                                                  GridAxis{-3, 3, 9}, GridAxis{-3, 3, 9}}),
               DimensionError);
  EXPECT_THROW(ReducedGrid::create(two, kUnit, {GridAxis{-3, 3, 9}}), DimensionError);
  EXPECT_THROW(ReducedGrid::create(one, kUnit, {GridAxis{-3, 3, 7}}), ParameterError);
  EXPECT_THROW(ReducedGrid::create(one, kUnit, {GridAxis{-0.5, 0.5, 9}}), ParameterError);
  const ReducedGrid g = ReducedGrid::create(two, kUnit, {GridAxis{-2, 2, 9}, GridAxis{-3, 3, 13}, GridAxis{-3, 3, 13}});
  EXPECT_EQ(g.dimension(), 3u);
  EXPECT_EQ(g.size(), 9u * 13u * 13u);
  EXPECT_DOUBLE_EQ(g.min_cell(), 0.5);
  EXPECT_DOUBLE_EQ(g.cell_diameter(), std::sqrt(0.25 + 0.25 + 0.25));
  for (std::size_t flat : {0ul, 17ul, g.size() - 1}) EXPECT_EQ(g.flat_index(g.multi_index(flat)), flat);
  const std::vector<double> p = g.point(200);
  EXPECT_EQ(g.nearest(p), 200u);
  EXPECT_EQ(g.reduce(g.master(p)), p);
}

TEST(BangBang, KnownTimesAndMonotoneInBound) {
  EXPECT_NEAR(bang_bang_oracle(kUnit, 0.0), oracle::kBangBangUnit, 1e-6);
  const double half = bang_bang_oracle(Params::create(1.0, 1.0, 0.5), 0.0);
  const double two = bang_bang_oracle(Params::create(1.0, 1.0, 2.0), 0.0);
  EXPECT_NEAR(half, oracle::kBangBangHalf, 1e-4);
  EXPECT_NEAR(two, oracle::kBangBangTwo, 1e-4);
  EXPECT_GT(half, oracle::kBangBangUnit);
  EXPECT_LT(two, oracle::kBangBangUnit);
  EXPECT_EQ(bang_bang_oracle(kUnit, 1.0), 0.0);
  EXPECT_EQ(bang_bang_oracle(kUnit, -1.0), 0.0);
}

TEST(ValueIteration, SingleNodeMatchesOracle) {
  const ValueField& f = single_node_field();
  const std::vector<double> origin{0.0};
  const double u0 = f.interpolate(origin);
  EXPECT_NEAR(u0, oracle::kBangBangUnit, 0.05 * oracle::kBangBangUnit);
  for (double start : {-1.8, -0.5, 0.4, 1.5}) {
    const std::vector<double> p{start};
    EXPECT_NEAR(f.interpolate(p), bang_bang_oracle(kUnit, start), 0.05) << start;
  }
}

TEST(ValueIteration, ZeroOnTargetAndBoundedBelowOne) {
  const ValueField& f = single_node_field();
  std::size_t targets = 0;
  for (std::size_t i = 0; i < f.grid().size(); ++i) {
    if (f.target_mask()[i]) {
      ++targets;
      EXPECT_EQ(f.at(i), 0.0);
    }
    EXPECT_LE(f.at(i), 1.0);
  }
  EXPECT_GT(targets, 0u);
}

TEST(ValueIteration, OddSymmetry) {
  const ValueField& f = single_node_field();
  const std::size_t n = f.grid().size();
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(f.at(i), f.at(n - 1 - i), 1e-9);
}

TEST(ValueIteration, RefinementWithinLipschitzCell) {
  const Lattice lat(1, 1);
  const ValueField& fine = single_node_field();
  const ValueField coarse = value_iteration(default_grid(lat, kUnit, 101), kUnit);
  const double slack = coarse.grid().cell_diameter() * fine.lipschitz_estimate();
  for (double start : {-1.0, -0.3, 0.0, 0.6, 2.0}) {
    const std::vector<double> p{start};
    EXPECT_LE(std::abs(fine.interpolate(p) - coarse.interpolate(p)), slack) << start;
  }
}

TEST(ValueIteration, OutsideBoxIsInfinite) {
  const std::vector<double> far{100.0};
  EXPECT_TRUE(std::isinf(single_node_field().interpolate(far)));
}

TEST(ValueIteration, SweepCapThrows) {
  const Lattice lat(1, 1);
  ValueIterationOptions o;
  o.max_sweeps = 3;
  EXPECT_THROW(value_iteration(default_grid(lat, kUnit, 41), kUnit, o), ConvergenceError);
}

TEST(Export, HeaderValuesAndSlice) {
  const Lattice lat(1, 2);
  const ValueField f = value_iteration(default_grid(lat, kUnit, 9), kUnit);
  std::stringstream out;
  f.write(out);
  std::string line;
  std::getline(out, line);
  EXPECT_EQ(line, "# kgflock value field");
  std::size_t axes = 0;
  while (std::getline(out, line) && line != "values:")
    if (line.rfind("axis: ", 0) == 0) ++axes;
  EXPECT_EQ(axes, 3u);
  std::size_t values = 0;
  while (std::getline(out, line)) {
    EXPECT_NO_THROW((void)std::stod(line));
    ++values;
  }
  EXPECT_EQ(values, f.grid().size());

  std::stringstream slice;
  const std::vector<double> anchor{0.0, 1.0, 1.0};
  f.write_slice(slice, anchor, 1, 2);
  std::getline(slice, line);
  EXPECT_EQ(line, "a,b,U");
  std::size_t rows = 0;
  while (std::getline(slice, line)) ++rows;
  EXPECT_EQ(rows, 81u);
}
