#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "ivpf/simd/injection_kernels.hpp"
#include "ivpf/simd/scalar_formulas.hpp"

#define IVPF_AVX2 __attribute__((target("avx2")))

namespace ivpf::simd::detail {

namespace {

IVPF_AVX2 inline __m256d negate(__m256d x) { return _mm256_xor_pd(x, _mm256_set1_pd(-0.0)); }

IVPF_AVX2 inline __m256d poly_value(const __m256d g[6], __m256d vr, __m256d vi) {
  __m256d acc = _mm256_add_pd(g[0], _mm256_mul_pd(g[1], vr));
  acc = _mm256_add_pd(acc, _mm256_mul_pd(g[2], vi));
  acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_mul_pd(g[3], vr), vi));
  acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_mul_pd(g[4], vr), vr));
  return _mm256_add_pd(acc, _mm256_mul_pd(_mm256_mul_pd(g[5], vi), vi));
}

}  // namespace

IVPF_AVX2 std::size_t constant_power_avx2(const ConstantPowerBatch& b, double guard) {
  const std::size_t n = b.size();
  std::size_t collapsed = kNoCollapse;
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d vguard = _mm256_set1_pd(guard);

  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d p = _mm256_loadu_pd(&b.p[k]);
    const __m256d q = _mm256_loadu_pd(&b.q[k]);
    const __m256d vr = _mm256_loadu_pd(&b.vr[k]);
    const __m256d vi = _mm256_loadu_pd(&b.vi[k]);

    const __m256d mag2 = _mm256_add_pd(_mm256_mul_pd(vr, vr), _mm256_mul_pd(vi, vi));
    if (collapsed == kNoCollapse) {
      const int ok = _mm256_movemask_pd(_mm256_cmp_pd(mag2, vguard, _CMP_GE_OQ));
      if (ok != 0xF) collapsed = k + static_cast<std::size_t>(__builtin_ctz(~ok & 0xF));
    }

    const __m256d ir = _mm256_div_pd(_mm256_add_pd(_mm256_mul_pd(p, vr), _mm256_mul_pd(q, vi)), mag2);
    const __m256d ii = _mm256_div_pd(_mm256_sub_pd(_mm256_mul_pd(p, vi), _mm256_mul_pd(q, vr)), mag2);
    const __m256d two_vr = _mm256_mul_pd(two, vr);
    const __m256d two_vi = _mm256_mul_pd(two, vi);

    _mm256_storeu_pd(&b.i_r[k], ir);
    _mm256_storeu_pd(&b.i_i[k], ii);
    _mm256_storeu_pd(&b.dir_dvr[k], _mm256_div_pd(_mm256_sub_pd(p, _mm256_mul_pd(two_vr, ir)), mag2));
    _mm256_storeu_pd(&b.dir_dvi[k], _mm256_div_pd(_mm256_sub_pd(q, _mm256_mul_pd(two_vi, ir)), mag2));
    _mm256_storeu_pd(&b.dii_dvr[k],
                     _mm256_div_pd(_mm256_sub_pd(negate(q), _mm256_mul_pd(two_vr, ii)), mag2));
    _mm256_storeu_pd(&b.dii_dvi[k], _mm256_div_pd(_mm256_sub_pd(p, _mm256_mul_pd(two_vi, ii)), mag2));
    _mm256_storeu_pd(&b.dir_dq[k], _mm256_div_pd(vi, mag2));
    _mm256_storeu_pd(&b.dii_dq[k], _mm256_div_pd(negate(vr), mag2));
  }

  for (; k < n; ++k) {
    const ConstantPowerPoint o = constant_power_point(b.p[k], b.q[k], b.vr[k], b.vi[k]);
    if (!(o.mag2 >= guard) && collapsed == kNoCollapse) collapsed = k;
    b.i_r[k] = o.i_r;
    b.i_i[k] = o.i_i;
    b.dir_dvr[k] = o.dir_dvr;
    b.dir_dvi[k] = o.dir_dvi;
    b.dii_dvr[k] = o.dii_dvr;
    b.dii_dvi[k] = o.dii_dvi;
    b.dir_dq[k] = o.dir_dq;
    b.dii_dq[k] = o.dii_dq;
  }
  return collapsed;
}

IVPF_AVX2 void polynomial_avx2(const PolynomialBatch& b) {
  const std::size_t n = b.size();
  const __m256d two = _mm256_set1_pd(2.0);

  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d vr = _mm256_loadu_pd(&b.vr[k]);
    const __m256d vi = _mm256_loadu_pd(&b.vi[k]);
    __m256d gr[6], gi[6];
    for (int c = 0; c < 6; ++c) {
      gr[c] = _mm256_loadu_pd(&b.g_real[c][k]);
      gi[c] = _mm256_loadu_pd(&b.g_imag[c][k]);
    }
    _mm256_storeu_pd(&b.i_r[k], poly_value(gr, vr, vi));
    _mm256_storeu_pd(&b.i_i[k], poly_value(gi, vr, vi));
    _mm256_storeu_pd(&b.dir_dvr[k], _mm256_add_pd(_mm256_add_pd(gr[1], _mm256_mul_pd(gr[3], vi)),
                                                  _mm256_mul_pd(_mm256_mul_pd(two, gr[4]), vr)));
    _mm256_storeu_pd(&b.dir_dvi[k], _mm256_add_pd(_mm256_add_pd(gr[2], _mm256_mul_pd(gr[3], vr)),
                                                  _mm256_mul_pd(_mm256_mul_pd(two, gr[5]), vi)));
    _mm256_storeu_pd(&b.dii_dvr[k], _mm256_add_pd(_mm256_add_pd(gi[1], _mm256_mul_pd(gi[3], vi)),
                                                  _mm256_mul_pd(_mm256_mul_pd(two, gi[4]), vr)));
    _mm256_storeu_pd(&b.dii_dvi[k], _mm256_add_pd(_mm256_add_pd(gi[2], _mm256_mul_pd(gi[3], vr)),
                                                  _mm256_mul_pd(_mm256_mul_pd(two, gi[5]), vi)));
  }

  for (; k < n; ++k) {
    std::array<double, 6> gr, gi;
    for (std::size_t c = 0; c < 6; ++c) {
      gr[c] = b.g_real[c][k];
      gi[c] = b.g_imag[c][k];
    }
    const PolynomialPart re = polynomial_part(gr, b.vr[k], b.vi[k]);
    const PolynomialPart im = polynomial_part(gi, b.vr[k], b.vi[k]);
    b.i_r[k] = re.value;
    b.i_i[k] = im.value;
    b.dir_dvr[k] = re.d_dvr;
    b.dir_dvi[k] = re.d_dvi;
    b.dii_dvr[k] = im.d_dvr;
    b.dii_dvi[k] = im.d_dvi;
  }
}

}  // namespace ivpf::simd::detail

#endif
