#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "kgflock/dynamics.hpp"
#include "kgflock/simd/kernels.hpp"

using namespace kgflock;
using namespace kgflock::simd;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double amp = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  std::vector<double> out(n);
  for (double& x : out) x = dist(rng);
  return out;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!isa_supported(Isa::Avx2)) GTEST_SKIP() << "AVX2 not available";
  }
  const KernelTable& ref = kernels(Isa::Scalar);
  const KernelTable& vec() { return kernels(Isa::Avx2); }
};

// Sizes straddle the 4-lane width so both the vector body and tails run.
const std::pair<int, int> kShapes[] = {{1, 1}, {1, 2}, {1, 3}, {1, 5}, {1, 8}, {1, 13}, {2, 3}, {2, 5}, {3, 3}};

}  // namespace

TEST(Dispatch, ScalarAlwaysSupported) {
  EXPECT_TRUE(isa_supported(Isa::Scalar));
  EXPECT_EQ(kernels(Isa::Scalar).isa, Isa::Scalar);
  EXPECT_EQ(isa_name(Isa::Avx2), "avx2");
}

TEST(Dispatch, SwitchesActiveTable) {
  const Isa before = active_isa();
  set_active_isa(Isa::Scalar);
  EXPECT_EQ(active_isa(), Isa::Scalar);
  set_active_isa(before);
  EXPECT_EQ(active_isa(), before);
}

TEST_F(KernelEquivalence, LaplacianBitIdentical) {
  for (auto [n, D] : kShapes) {
    const Lattice lat(n, D);
    const auto f = random_vec(lat.size(), 3 + lat.size());
    std::vector<double> a(lat.size()), b(lat.size());
    ref.laplacian(lat.neighbor_table().data(), lat.degree(), lat.size(), lat.inv_spacing_sq(), f.data(), a.data());
    vec().laplacian(lat.neighbor_table().data(), lat.degree(), lat.size(), lat.inv_spacing_sq(), f.data(), b.data());
    EXPECT_TRUE(same_bits(a, b)) << "n=" << n << " D=" << D;
  }
}

TEST_F(KernelEquivalence, AccelerationBitIdentical) {
  for (auto [n, D] : kShapes) {
    const Lattice lat(n, D);
    const auto x = random_vec(lat.size(), 1), v = random_vec(lat.size(), 2), u = random_vec(lat.size(), 3, 1.0);
    for (const double* up : {u.data(), static_cast<const double*>(nullptr)}) {
      std::vector<double> a(lat.size()), b(lat.size());
      ref.acceleration(lat.neighbor_table().data(), lat.degree(), lat.size(), lat.inv_spacing_sq(), 1.3, 0.7,
                       x.data(), v.data(), up, a.data());
      vec().acceleration(lat.neighbor_table().data(), lat.degree(), lat.size(), lat.inv_spacing_sq(), 1.3, 0.7,
                         x.data(), v.data(), up, b.data());
      EXPECT_TRUE(same_bits(a, b)) << "n=" << n << " D=" << D;
    }
  }
}

TEST_F(KernelEquivalence, AxpyAndCombineBitIdentical) {
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 65u}) {
    const auto y = random_vec(n, 1), k1 = random_vec(n, 2), k2 = random_vec(n, 3), k3 = random_vec(n, 4),
               k4 = random_vec(n, 5);
    std::vector<double> a(n), b(n);
    ref.axpy(n, 0.37, k1.data(), y.data(), a.data());
    vec().axpy(n, 0.37, k1.data(), y.data(), b.data());
    EXPECT_TRUE(same_bits(a, b));
    ref.rk4_combine(n, 1e-3, y.data(), k1.data(), k2.data(), k3.data(), k4.data(), a.data());
    vec().rk4_combine(n, 1e-3, y.data(), k1.data(), k2.data(), k3.data(), k4.data(), b.data());
    EXPECT_TRUE(same_bits(a, b));
  }
}

TEST_F(KernelEquivalence, DampingBitIdenticalIncludingBranchEdges) {
  const DampingCoeffs c{1.0, 0.5, 2.0, false};
  std::vector<double> v = random_vec(61, 9, 5.0);
  for (double e : {0.0, -0.0, 0.5, -0.5, 2.0, -2.0, 4.0, -4.0, 3.999999, 0.4999999, 1e-300})
    v.push_back(e);
  for (bool sat : {false, true}) {
    DampingCoeffs cc = c;
    cc.saturating = sat;
    std::vector<double> a(v.size()), b(v.size());
    ref.damping(v.size(), cc, v.data(), a.data());
    vec().damping(v.size(), cc, v.data(), b.data());
    EXPECT_TRUE(same_bits(a, b)) << "saturating=" << sat;
  }
}

TEST_F(KernelEquivalence, LyapunovAgreesToRounding) {
  for (auto [n, D] : kShapes) {
    const Lattice lat(n, D);
    const auto x = random_vec(lat.size(), 21), v = random_vec(lat.size(), 22);
    const double a = ref.lyapunov(lat.neighbor_table().data(), lat.degree(), lat.size(), lat.inv_spacing_sq(), x.data(), v.data());
    const double b = vec().lyapunov(lat.neighbor_table().data(), lat.degree(), lat.size(), lat.inv_spacing_sq(), x.data(), v.data());
    EXPECT_NEAR(a, b, 1e-13 * std::abs(a));
  }
}

TEST_F(KernelEquivalence, IntegratorTrajectoriesBitIdentical) {
  const Lattice lat(2, 3);
  const Params p = Params::create(1.0, 1.0, 1.0);
  auto run = [&](Isa isa) {
    set_active_isa(isa);
    State s{0.0, random_vec(lat.size(), 31), random_vec(lat.size(), 32)};
    Rk4Integrator rk(lat, p.coefficients(), p.bound());
    const ControlLaw law = [&](double, const State& st, std::span<double> u) {
      for (std::size_t l = 0; l < u.size(); ++l) u[l] = -0.5 * std::tanh(st.v[l]);
    };
    for (int k = 0; k < 500; ++k) rk.step(s, law, 1e-3);
    return s;
  };
  const Isa before = active_isa();
  const State a = run(Isa::Scalar), b = run(Isa::Avx2);
  set_active_isa(before);
  EXPECT_TRUE(same_bits(a.x, b.x));
  EXPECT_TRUE(same_bits(a.v, b.v));
}
