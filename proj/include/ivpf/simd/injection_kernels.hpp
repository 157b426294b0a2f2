#pragma once

// Batched evaluation of the nonlinear current injections. Every ISA variant
// performs the same IEEE operations in the same order as the scalar
// reference, so results are bit-identical across variants (the library is
// built with -ffp-contract=off).

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>

namespace ivpf::simd {

inline constexpr std::size_t kNoCollapse = std::numeric_limits<std::size_t>::max();

// Constant-power current injection I = conj(S / V) split into real and
// imaginary parts, with its partials. Structure-of-arrays, all spans the
// same length.
struct ConstantPowerBatch {
  std::span<const double> p, q, vr, vi;
  std::span<double> i_r, i_i;
  std::span<double> dir_dvr, dir_dvi, dii_dvr, dii_dvi;
  std::span<double> dir_dq, dii_dq;

  std::size_t size() const { return p.size(); }
};

// Second-order polynomial in (Vr, Vi) per part.
struct PolynomialBatch {
  std::array<std::span<const double>, 6> g_real, g_imag;
  std::span<const double> vr, vi;
  std::span<double> i_r, i_i;
  std::span<double> dir_dvr, dir_dvi, dii_dvr, dii_dvi;

  std::size_t size() const { return vr.size(); }
};

// Returns the first index with Vr^2 + Vi^2 < guard (or non-finite), or
// kNoCollapse. All outputs are written regardless.
using ConstantPowerKernel = std::size_t (*)(const ConstantPowerBatch&, double guard);
using PolynomialKernel = void (*)(const PolynomialBatch&);

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  ConstantPowerKernel constant_power;
  PolynomialKernel polynomial;
};

bool isa_supported(Isa isa);

// Throws std::invalid_argument if the ISA is not available on this machine
// or in this build.
const KernelTable& kernels(Isa isa);

// Best supported ISA, unless IVPF_SIMD=scalar|avx2|neon names another
// supported one. Resolved once.
const KernelTable& active_kernels();

namespace detail {

std::size_t constant_power_scalar(const ConstantPowerBatch& b, double guard);
void polynomial_scalar(const PolynomialBatch& b);

#if defined(__x86_64__) || defined(_M_X64)
std::size_t constant_power_avx2(const ConstantPowerBatch& b, double guard);
void polynomial_avx2(const PolynomialBatch& b);
#endif

#if defined(__aarch64__)
std::size_t constant_power_neon(const ConstantPowerBatch& b, double guard);
void polynomial_neon(const PolynomialBatch& b);
#endif

}  // namespace detail

}  // namespace ivpf::simd
