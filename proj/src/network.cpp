#include "ivpf/network.hpp"

namespace ivpf {

double NetworkModel::scheduled_p_load(std::size_t bus) const {
  const Bus& b = buses[bus];
  return b.kind == BusKind::Slack ? b.p_load : b.p_load * injection_factor();
}

double NetworkModel::scheduled_q_load(std::size_t bus) const {
  const Bus& b = buses[bus];
  return b.kind == BusKind::Slack ? b.q_load : b.q_load * injection_factor();
}

PolyLoadCoeffs NetworkModel::scheduled_poly(std::size_t k) const {
  PolyLoadCoeffs c = poly_loads[k].coeffs;
  for (std::size_t i = 0; i < 6; ++i) {
    c.g_real[i] *= beta;
    c.g_imag[i] *= beta;
  }
  return c;
}

}  // namespace ivpf
