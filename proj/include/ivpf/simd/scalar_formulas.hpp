#pragma once

// Reference formulas for one device. The batched kernels in every ISA
// replay exactly this operation sequence.

#include <array>

namespace ivpf::simd {

struct ConstantPowerPoint {
  double mag2;
  double i_r, i_i;
  double dir_dvr, dir_dvi, dii_dvr, dii_dvi;
  double dir_dq, dii_dq;
};

//   I_R = (P Vr + Q Vi) / |V|^2,   I_I = (P Vi - Q Vr) / |V|^2
inline ConstantPowerPoint constant_power_point(double p, double q, double vr, double vi) {
  ConstantPowerPoint o;
  o.mag2 = vr * vr + vi * vi;
  o.i_r = (p * vr + q * vi) / o.mag2;
  o.i_i = (p * vi - q * vr) / o.mag2;
  o.dir_dvr = (p - (2.0 * vr) * o.i_r) / o.mag2;
  o.dir_dvi = (q - (2.0 * vi) * o.i_r) / o.mag2;
  o.dii_dvr = (-q - (2.0 * vr) * o.i_i) / o.mag2;
  o.dii_dvi = (p - (2.0 * vi) * o.i_i) / o.mag2;
  o.dir_dq = vi / o.mag2;
  o.dii_dq = -vr / o.mag2;
  return o;
}

struct PolynomialPart {
  double value, d_dvr, d_dvi;
};

// g1 + g2 Vr + g3 Vi + g4 Vr Vi + g5 Vr^2 + g6 Vi^2
inline PolynomialPart polynomial_part(const std::array<double, 6>& g, double vr, double vi) {
  PolynomialPart o;
  o.value = ((((g[0] + g[1] * vr) + g[2] * vi) + (g[3] * vr) * vi) + (g[4] * vr) * vr) + (g[5] * vi) * vi;
  o.d_dvr = (g[1] + g[3] * vi) + (2.0 * g[4]) * vr;
  o.d_dvi = (g[2] + g[3] * vr) + (2.0 * g[5]) * vi;
  return o;
}

}  // namespace ivpf::simd
