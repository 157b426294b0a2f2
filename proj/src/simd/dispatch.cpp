#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ivpf/simd/injection_kernels.hpp"

namespace ivpf::simd {

namespace {

constexpr KernelTable kScalarTable{Isa::Scalar, &detail::constant_power_scalar, &detail::polynomial_scalar};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2Table{Isa::Avx2, &detail::constant_power_avx2, &detail::polynomial_avx2};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeonTable{Isa::Neon, &detail::constant_power_neon, &detail::polynomial_neon};
#endif

const KernelTable& resolve_active() {
  Isa chosen = Isa::Scalar;
  if (isa_supported(Isa::Avx2)) chosen = Isa::Avx2;
  if (isa_supported(Isa::Neon)) chosen = Isa::Neon;
  if (const char* env = std::getenv("IVPF_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == to_string(isa) && isa_supported(isa)) chosen = isa;
    }
  }
  return kernels(chosen);
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("SIMD variant '" + std::string(to_string(isa)) + "' is not available");
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: return kAvx2Table;
#endif
#if defined(__aarch64__)
    case Isa::Neon: return kNeonTable;
#endif
    default: return kScalarTable;
  }
}

const KernelTable& active_kernels() {
  static const KernelTable& table = resolve_active();
  return table;
}

}  // namespace ivpf::simd
