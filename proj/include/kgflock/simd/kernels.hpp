#pragma once

// Data-parallel inner loops of the lattice integrator.
//
// Every kernel exists as a scalar reference and, where the build and CPU allow,
// an AVX2 variant. Element-wise kernels perform the same operations in the same
// order in every variant, so their results are bit-identical; only the
// reductions (lyapunov) reassociate and agree to rounding.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace kgflock::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Constants of the damping-phase feedback.
struct DampingCoeffs {
  double bound;      // M
  double low;        // a_1
  double high;       // a_2
  bool saturating;   // true: simple variant (no roll-off above a_2)
};

struct KernelTable {
  Isa isa;

  // out[l] = D^2 * sum_k (f[nbr[l*deg+k]] - f[l])
  void (*laplacian)(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2,
                    const double* f, double* out);

  // out[l] = lap(x)[l] + (alpha - beta v^2) v + u[l]; u may be null (treated as 0).
  void (*acceleration)(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2,
                       double alpha, double beta, const double* x, const double* v,
                       const double* u, double* out);

  // out = y + a * k
  void (*axpy)(std::size_t n, double a, const double* k, const double* y, double* out);

  // out = y + (dt/6) * (((k1 + 2 k2) + 2 k3) + k4)
  void (*rk4_combine)(std::size_t n, double dt, const double* y, const double* k1,
                      const double* k2, const double* k3, const double* k4, double* out);

  // u[l] = damping feedback of v[l]
  void (*damping)(std::size_t n, const DampingCoeffs& c, const double* v, double* u);

  // 0.5 * sum_l [ v_l^2 + 0.5 * D^2 * sum_k (x_nbr - x_l)^2 ]
  double (*lyapunov)(const std::uint32_t* nbr, int deg, std::size_t n, double inv_h2,
                     const double* x, const double* v);
};

bool isa_supported(Isa isa) noexcept;

/// Best ISA the CPU supports, unless KGFLOCK_ISA=scalar|avx2 says otherwise.
Isa detected_isa() noexcept;

/// Kernel table currently used by the library.
const KernelTable& kernels() noexcept;

/// Kernel table for a specific ISA; throws ParameterError if unsupported.
const KernelTable& kernels(Isa isa);

/// Switch the process-wide kernel table (tests and benchmarks).
void set_active_isa(Isa isa);
Isa active_isa() noexcept;

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(KGFLOCK_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
}  // namespace detail

}  // namespace kgflock::simd
