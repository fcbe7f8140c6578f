#include "kgflock/simd/kernels.hpp"

#include <cmath>

namespace kgflock::simd::detail {
namespace {

void laplacian(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2, const double* f,
               double* out) {
  for (std::size_t l = 0; l < n; ++l) {
    const std::uint32_t* row = nbr + l * static_cast<std::size_t>(deg);
    double acc = 0.0;
    for (int k = 0; k < deg; ++k) acc += f[row[k]] - f[l];
    out[l] = acc * inv_h2;
  }
}

void acceleration(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2, double alpha,
                  double beta, const double* x, const double* v, const double* u, double* out) {
  for (std::size_t l = 0; l < n; ++l) {
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
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + a * k[i];
}

void rk4_combine(std::size_t n, double dt, const double* y, const double* k1, const double* k2,
                 const double* k3, const double* k4, double* out) {
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = ((k1[i] + 2.0 * k2[i]) + 2.0 * k3[i]) + k4[i];
    out[i] = y[i] + w * s;
  }
}

void damping(std::size_t n, const DampingCoeffs& c, const double* v, double* u) {
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = v[i];
    const double mag = std::fabs(vi);
    const double sgn = vi > 0.0 ? 1.0 : (vi < 0.0 ? -1.0 : 0.0);
    double out;
    if (mag < c.low) {
      out = -c.bound * (vi / c.low);
    } else if (c.saturating || mag <= c.high) {
      out = -c.bound * sgn;
    } else if (mag < 2.0 * c.high) {
      out = -c.bound * sgn * (2.0 - mag / c.high);
    } else {
      out = 0.0;
    }
    u[i] = out;
  }
}

double lyapunov(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2, const double* x,
                const double* v) {
  double total = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
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

const KernelTable kTable{Isa::Scalar, laplacian, acceleration, axpy, rk4_combine, damping, lyapunov};

}  // namespace

const KernelTable& scalar_table() noexcept { return kTable; }

}  // namespace kgflock::simd::detail
