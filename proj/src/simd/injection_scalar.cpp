#include "ivpf/simd/injection_kernels.hpp"
#include "ivpf/simd/scalar_formulas.hpp"

namespace ivpf::simd::detail {

std::size_t constant_power_scalar(const ConstantPowerBatch& b, double guard) {
  std::size_t collapsed = kNoCollapse;
  for (std::size_t k = 0; k < b.size(); ++k) {
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

void polynomial_scalar(const PolynomialBatch& b) {
  for (std::size_t k = 0; k < b.size(); ++k) {
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
