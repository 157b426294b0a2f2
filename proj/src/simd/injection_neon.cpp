#if defined(__aarch64__)

#include <arm_neon.h>

#include "ivpf/simd/injection_kernels.hpp"
#include "ivpf/simd/scalar_formulas.hpp"

namespace ivpf::simd::detail {

namespace {

inline float64x2_t poly_value(const float64x2_t g[6], float64x2_t vr, float64x2_t vi) {
  float64x2_t acc = vaddq_f64(g[0], vmulq_f64(g[1], vr));
  acc = vaddq_f64(acc, vmulq_f64(g[2], vi));
  acc = vaddq_f64(acc, vmulq_f64(vmulq_f64(g[3], vr), vi));
  acc = vaddq_f64(acc, vmulq_f64(vmulq_f64(g[4], vr), vr));
  return vaddq_f64(acc, vmulq_f64(vmulq_f64(g[5], vi), vi));
}

}  // namespace

std::size_t constant_power_neon(const ConstantPowerBatch& b, double guard) {
  const std::size_t n = b.size();
  std::size_t collapsed = kNoCollapse;
  const float64x2_t two = vdupq_n_f64(2.0);
  const float64x2_t vguard = vdupq_n_f64(guard);

  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t p = vld1q_f64(&b.p[k]);
    const float64x2_t q = vld1q_f64(&b.q[k]);
    const float64x2_t vr = vld1q_f64(&b.vr[k]);
    const float64x2_t vi = vld1q_f64(&b.vi[k]);

    const float64x2_t mag2 = vaddq_f64(vmulq_f64(vr, vr), vmulq_f64(vi, vi));
    if (collapsed == kNoCollapse) {
      const uint64x2_t ok = vcgeq_f64(mag2, vguard);
      if (vgetq_lane_u64(ok, 0) == 0) {
        collapsed = k;
      } else if (vgetq_lane_u64(ok, 1) == 0) {
        collapsed = k + 1;
      }
    }

    const float64x2_t ir = vdivq_f64(vaddq_f64(vmulq_f64(p, vr), vmulq_f64(q, vi)), mag2);
    const float64x2_t ii = vdivq_f64(vsubq_f64(vmulq_f64(p, vi), vmulq_f64(q, vr)), mag2);
    const float64x2_t two_vr = vmulq_f64(two, vr);
    const float64x2_t two_vi = vmulq_f64(two, vi);

    vst1q_f64(&b.i_r[k], ir);
    vst1q_f64(&b.i_i[k], ii);
    vst1q_f64(&b.dir_dvr[k], vdivq_f64(vsubq_f64(p, vmulq_f64(two_vr, ir)), mag2));
    vst1q_f64(&b.dir_dvi[k], vdivq_f64(vsubq_f64(q, vmulq_f64(two_vi, ir)), mag2));
    vst1q_f64(&b.dii_dvr[k], vdivq_f64(vsubq_f64(vnegq_f64(q), vmulq_f64(two_vr, ii)), mag2));
    vst1q_f64(&b.dii_dvi[k], vdivq_f64(vsubq_f64(p, vmulq_f64(two_vi, ii)), mag2));
    vst1q_f64(&b.dir_dq[k], vdivq_f64(vi, mag2));
    vst1q_f64(&b.dii_dq[k], vdivq_f64(vnegq_f64(vr), mag2));
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

void polynomial_neon(const PolynomialBatch& b) {
  const std::size_t n = b.size();
  const float64x2_t two = vdupq_n_f64(2.0);

  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t vr = vld1q_f64(&b.vr[k]);
    const float64x2_t vi = vld1q_f64(&b.vi[k]);
    float64x2_t gr[6], gi[6];
    for (int c = 0; c < 6; ++c) {
      gr[c] = vld1q_f64(&b.g_real[c][k]);
      gi[c] = vld1q_f64(&b.g_imag[c][k]);
    }
    vst1q_f64(&b.i_r[k], poly_value(gr, vr, vi));
    vst1q_f64(&b.i_i[k], poly_value(gi, vr, vi));
    vst1q_f64(&b.dir_dvr[k],
              vaddq_f64(vaddq_f64(gr[1], vmulq_f64(gr[3], vi)), vmulq_f64(vmulq_f64(two, gr[4]), vr)));
    vst1q_f64(&b.dir_dvi[k],
              vaddq_f64(vaddq_f64(gr[2], vmulq_f64(gr[3], vr)), vmulq_f64(vmulq_f64(two, gr[5]), vi)));
    vst1q_f64(&b.dii_dvr[k],
              vaddq_f64(vaddq_f64(gi[1], vmulq_f64(gi[3], vi)), vmulq_f64(vmulq_f64(two, gi[4]), vr)));
    vst1q_f64(&b.dii_dvi[k],
              vaddq_f64(vaddq_f64(gi[2], vmulq_f64(gi[3], vr)), vmulq_f64(vmulq_f64(two, gi[5]), vi)));
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
