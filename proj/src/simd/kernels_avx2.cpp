#include <immintrin.h>

#include "kgflock/simd/kernels.hpp"

namespace kgflock::simd::detail {
namespace {

constexpr std::size_t kLanes = 4;

inline __m128i neighbor_lanes(const std::uint32_t* nbr, int deg, std::size_t l, int k) {
  const std::size_t d = static_cast<std::size_t>(deg);
  const std::uint32_t* base = nbr + l * d + static_cast<std::size_t>(k);
  return _mm_set_epi32(static_cast<int>(base[3 * d]), static_cast<int>(base[2 * d]),
                       static_cast<int>(base[d]), static_cast<int>(base[0]));
}

inline __m256d lap4(const std::uint32_t* nbr, int deg, std::size_t l, __m256d inv_h2,
                    const double* f) {
  const __m256d center = _mm256_loadu_pd(f + l);
  __m256d acc = _mm256_setzero_pd();
  for (int k = 0; k < deg; ++k) {
    const __m256d other = _mm256_i32gather_pd(f, neighbor_lanes(nbr, deg, l, k), 8);
    acc = _mm256_add_pd(acc, _mm256_sub_pd(other, center));
  }
  return _mm256_mul_pd(acc, inv_h2);
}

void laplacian(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2, const double* f,
               double* out) {
  const __m256d w = _mm256_set1_pd(inv_h2);
  std::size_t l = 0;
  for (; l + kLanes <= n; l += kLanes) _mm256_storeu_pd(out + l, lap4(nbr, deg, l, w, f));
  for (; l < n; ++l) {
    const std::uint32_t* row = nbr + l * static_cast<std::size_t>(deg);
    double acc = 0.0;
    for (int k = 0; k < deg; ++k) acc += f[row[k]] - f[l];
    out[l] = acc * inv_h2;
  }
}

void acceleration(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2, double alpha,
                  double beta, const double* x, const double* v, const double* u, double* out) {
  const __m256d w = _mm256_set1_pd(inv_h2);
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t l = 0;
  for (; l + kLanes <= n; l += kLanes) {
    const __m256d lap = lap4(nbr, deg, l, w, x);
    const __m256d vl = _mm256_loadu_pd(v + l);
    const __m256d bvv = _mm256_mul_pd(_mm256_mul_pd(vb, vl), vl);
    const __m256d onsite = _mm256_mul_pd(_mm256_sub_pd(va, bvv), vl);
    const __m256d ul = u ? _mm256_loadu_pd(u + l) : _mm256_setzero_pd();
    _mm256_storeu_pd(out + l, _mm256_add_pd(_mm256_add_pd(lap, onsite), ul));
  }
  for (; l < n; ++l) {
    const std::uint32_t* row = nbr + l * static_cast<std::size_t>(deg);
    double acc = 0.0;
    for (int k = 0; k < deg; ++k) acc += x[row[k]] - x[l];
    const double lap = acc * inv_h2;
    const double vl = v[l];
    const double onsite = (alpha - beta * vl * vl) * vl;
    out[l] = (lap + onsite) + (u ? u[l] : 0.0);
  }
}

void axpy(std::size_t n, double a, const double* k, const double* y, double* out) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(k + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = y[i] + a * k[i];
}

void rk4_combine(std::size_t n, double dt, const double* y, const double* k1, const double* k2,
                 const double* k3, const double* k4, double* out) {
  const double w = dt / 6.0;
  const __m256d vw = _mm256_set1_pd(w);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d s = _mm256_add_pd(_mm256_loadu_pd(k1 + i), _mm256_mul_pd(two, _mm256_loadu_pd(k2 + i)));
    s = _mm256_add_pd(s, _mm256_mul_pd(two, _mm256_loadu_pd(k3 + i)));
    s = _mm256_add_pd(s, _mm256_loadu_pd(k4 + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(vw, s)));
  }
  for (; i < n; ++i) {
    const double s = ((k1[i] + 2.0 * k2[i]) + 2.0 * k3[i]) + k4[i];
    out[i] = y[i] + w * s;
  }
}

void damping(std::size_t n, const DampingCoeffs& c, const double* v, double* u) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d neg_bound = _mm256_set1_pd(-c.bound);
  const __m256d low = _mm256_set1_pd(c.low);
  const __m256d high = _mm256_set1_pd(c.high);
  const __m256d two_high = _mm256_set1_pd(2.0 * c.high);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vi = _mm256_loadu_pd(v + i);
    const __m256d mag = _mm256_andnot_pd(sign_mask, vi);
    const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(vi, zero, _CMP_GT_OQ), one);
    const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(vi, zero, _CMP_LT_OQ), one);
    const __m256d sgn = _mm256_sub_pd(pos, neg);

    const __m256d linear = _mm256_mul_pd(neg_bound, _mm256_div_pd(vi, low));
    const __m256d saturated = _mm256_mul_pd(neg_bound, sgn);
    const __m256d rolloff = _mm256_mul_pd(saturated, _mm256_sub_pd(two, _mm256_div_pd(mag, high)));

    __m256d out;
    if (c.saturating) {
      out = saturated;
    } else {
      out = _mm256_blendv_pd(rolloff, saturated, _mm256_cmp_pd(mag, high, _CMP_LE_OQ));
      out = _mm256_blendv_pd(out, zero, _mm256_cmp_pd(mag, two_high, _CMP_GE_OQ));
    }
    out = _mm256_blendv_pd(out, linear, _mm256_cmp_pd(mag, low, _CMP_LT_OQ));
    _mm256_storeu_pd(u + i, out);
  }
  if (i < n) scalar_table().damping(n - i, c, v + i, u + i);
}

double lyapunov(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2, const double* x,
                const double* v) {
  const __m256d w = _mm256_set1_pd(inv_h2);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d total4 = _mm256_setzero_pd();
  std::size_t l = 0;
  for (; l + kLanes <= n; l += kLanes) {
    const __m256d center = _mm256_loadu_pd(x + l);
    __m256d bond = _mm256_setzero_pd();
    for (int k = 0; k < deg; ++k) {
      const __m256d other = _mm256_i32gather_pd(x, neighbor_lanes(nbr, deg, l, k), 8);
      const __m256d d = _mm256_sub_pd(other, center);
      bond = _mm256_add_pd(bond, _mm256_mul_pd(d, d));
    }
    const __m256d vl = _mm256_loadu_pd(v + l);
    const __m256d term = _mm256_add_pd(_mm256_mul_pd(vl, vl), _mm256_mul_pd(half, _mm256_mul_pd(bond, w)));
    total4 = _mm256_add_pd(total4, term);
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, total4);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; l < n; ++l) {
    const std::uint32_t* row = nbr + l * static_cast<std::size_t>(deg);
    double bond = 0.0;
    for (int k = 0; k < deg; ++k) {
      const double d = x[row[k]] - x[l];
      bond += d * d;
    }
    total += v[l] * v[l] + 0.5 * (bond * inv_h2);
  }
  return 0.5 * total;
}

const KernelTable kTable{Isa::Avx2, laplacian, acceleration, axpy, rk4_combine, damping, lyapunov};

}  // namespace

const KernelTable& avx2_table() noexcept { return kTable; }

}  // namespace kgflock::simd::detail
