#include <atomic>
#include <cstdlib>
#include <string>

#include "kgflock/error.hpp"
#include "kgflock/simd/kernels.hpp"

namespace kgflock::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(KGFLOCK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{nullptr};
  return slot;
}

const KernelTable& table_for(Isa isa) noexcept {
#if defined(KGFLOCK_HAVE_AVX2)
  if (isa == Isa::Avx2) return detail::avx2_table();
#endif
  (void)isa;
  return detail::scalar_table();
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: return cpu_has_avx2();
  }
  return false;
}

Isa detected_isa() noexcept {
  if (const char* env = std::getenv("KGFLOCK_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

const KernelTable& kernels() noexcept {
  const KernelTable* table = active_slot().load(std::memory_order_acquire);
  if (!table) {
    table = &table_for(detected_isa());
    active_slot().store(table, std::memory_order_release);
  }
  return *table;
}

const KernelTable& kernels(Isa isa) {
  if (!isa_supported(isa))
    throw ParameterError("kernel ISA '" + std::string(isa_name(isa)) + "' not supported on this CPU");
  return table_for(isa);
}

void set_active_isa(Isa isa) { active_slot().store(&kernels(isa), std::memory_order_release); }

Isa active_isa() noexcept { return kernels().isa; }

}  // namespace kgflock::simd
