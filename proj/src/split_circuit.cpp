#include "ivpf/split_circuit.hpp"

#include <cmath>
#include <complex>

#include "ivpf/simd/scalar_formulas.hpp"

namespace ivpf {

namespace {

using cplx = std::complex<double>;

void check_guard(double mag2) {
  if (!(mag2 >= kVoltageGuard)) throw VoltageCollapse(mag2);
}

// Stamps -Y_block * V into the KCL rows of (row_bus) from the voltages of
// (col_bus): real row gets -(G Vr - B Vi), imaginary row -(B Vr + G Vi).
void stamp_admittance(DeviceStamp& s, const UnknownLayout& layout, std::size_t row_bus, std::size_t col_bus,
                      cplx y) {
  const double g = y.real();
  const double b = y.imag();
  s.add(layout.vr_index(row_bus), layout.vr_index(col_bus), -g);
  s.add(layout.vr_index(row_bus), layout.vi_index(col_bus), b);
  s.add(layout.vi_index(row_bus), layout.vr_index(col_bus), -b);
  s.add(layout.vi_index(row_bus), layout.vi_index(col_bus), -g);
}

}  // namespace

UnknownLayout build_layout(const NetworkModel& net) {
  std::vector<std::size_t> slacks;
  for (const Bus& b : net.buses) {
    if (b.kind == BusKind::Slack) slacks.push_back(b.index);
  }
  for (const PvGen& g : net.pv_gens) {
    if (g.bus >= net.buses.size() || net.buses[g.bus].kind != BusKind::PV) {
      throw std::invalid_argument("PV generator record at a non-PV bus");
    }
  }
  return UnknownLayout(net.buses.size(), net.pv_gens.size(), std::move(slacks));
}

InjectionEval eval_pq_load(double p, double q, double vr, double vi) {
  const simd::ConstantPowerPoint o = simd::constant_power_point(p, q, vr, vi);
  check_guard(o.mag2);
  return {o.i_r, o.i_i, o.dir_dvr, o.dir_dvi, o.dii_dvr, o.dii_dvi};
}

PvSourceEval eval_pv_source(double p_g, double q_g, double vr, double vi, double v_set) {
  const simd::ConstantPowerPoint o = simd::constant_power_point(p_g, q_g, vr, vi);
  check_guard(o.mag2);
  PvSourceEval e;
  e.i_r = o.i_r;
  e.i_i = o.i_i;
  e.dir_dvr = o.dir_dvr;
  e.dir_dvi = o.dir_dvi;
  e.dii_dvr = o.dii_dvr;
  e.dii_dvi = o.dii_dvi;
  e.dir_dq = o.dir_dq;
  e.dii_dq = o.dii_dq;
  e.constraint = o.mag2 - v_set * v_set;
  e.dc_dvr = 2.0 * vr;
  e.dc_dvi = 2.0 * vi;
  return e;
}

InjectionEval eval_polynomial_injection(const PolyLoadCoeffs& c, double vr, double vi) {
  const simd::PolynomialPart re = simd::polynomial_part(c.g_real, vr, vi);
  const simd::PolynomialPart im = simd::polynomial_part(c.g_imag, vr, vi);
  return {re.value, im.value, re.d_dvr, re.d_dvi, im.d_dvr, im.d_dvi};
}

double pv_net_p(const NetworkModel& net, std::size_t gen) {
  return net.scheduled_p_gen(gen) - net.scheduled_p_load(net.pv_gens[gen].bus);
}

double pv_net_q(const NetworkModel& net, std::size_t gen, double q_gen) {
  return q_gen - net.scheduled_q_load(net.pv_gens[gen].bus);
}

bool has_pq_device(const NetworkModel& net, std::size_t bus) {
  return net.buses[bus].kind != BusKind::PV && (net.scheduled_p_load(bus) != 0.0 || net.scheduled_q_load(bus) != 0.0);
}

DeviceStamp stamp_branch(const Branch& br, const UnknownLayout& layout) {
  if (br.series_r == 0.0 && br.series_x == 0.0) {
    throw ZeroImpedance("ZeroImpedance: branch has r = x = 0");
  }
  const cplx ys = 1.0 / cplx(br.series_r, br.series_x);
  const cplx charging(0.0, br.charging_b / 2.0);
  const cplx tap = std::polar(br.tap, br.shift);

  const cplx y_tt = ys + charging;
  const cplx y_ff = y_tt / (br.tap * br.tap);
  const cplx y_ft = -ys / std::conj(tap);
  const cplx y_tf = -ys / tap;

  DeviceStamp s;
  stamp_admittance(s, layout, br.from, br.from, y_ff);
  stamp_admittance(s, layout, br.from, br.to, y_ft);
  stamp_admittance(s, layout, br.to, br.from, y_tf);
  stamp_admittance(s, layout, br.to, br.to, y_tt);
  return s;
}

DeviceStamp stamp_shunt(const Bus& bus, const UnknownLayout& layout) {
  DeviceStamp s;
  if (bus.g_shunt != 0.0 || bus.b_shunt != 0.0) {
    stamp_admittance(s, layout, bus.index, bus.index, cplx(bus.g_shunt, bus.b_shunt));
  }
  return s;
}

DeviceStamp stamp_slack(const Bus& bus, const UnknownLayout& layout) {
  if (bus.kind != BusKind::Slack) throw std::invalid_argument("stamp_slack on a non-slack bus");
  const auto& slacks = layout.slack_buses();
  std::size_t k = 0;
  while (k < slacks.size() && slacks[k] != bus.index) ++k;
  if (k == slacks.size()) throw std::invalid_argument("slack bus missing from layout");

  const std::size_t ir = layout.slack_ir_index(k);
  const std::size_t ii = layout.slack_ii_index(k);
  DeviceStamp s;
  s.add(layout.vr_index(bus.index), ir, 1.0);
  s.add(layout.vi_index(bus.index), ii, 1.0);
  // Vr - Vset cos(theta) = 0, Vi - Vset sin(theta) = 0
  s.add(ir, layout.vr_index(bus.index), 1.0);
  s.add(ii, layout.vi_index(bus.index), 1.0);
  s.add_residual(ir, -bus.v_set * std::cos(bus.theta_set));
  s.add_residual(ii, -bus.v_set * std::sin(bus.theta_set));
  return s;
}

DeviceStamp stamp_pq_load(const NetworkModel& net, std::size_t bus, const UnknownLayout& layout,
                          std::span<const double> x) {
  const std::size_t r = layout.vr_index(bus);
  const std::size_t i = layout.vi_index(bus);
  const InjectionEval e = eval_pq_load(net.scheduled_p_load(bus), net.scheduled_q_load(bus), x[r], x[i]);
  DeviceStamp s;
  s.add(r, r, -e.dir_dvr);
  s.add(r, i, -e.dir_dvi);
  s.add(i, r, -e.dii_dvr);
  s.add(i, i, -e.dii_dvi);
  s.add_residual(r, -e.i_r);
  s.add_residual(i, -e.i_i);
  return s;
}

DeviceStamp stamp_pv_source(const NetworkModel& net, std::size_t gen, const UnknownLayout& layout,
                            std::span<const double> x) {
  const PvGen& g = net.pv_gens[gen];
  const std::size_t r = layout.vr_index(g.bus);
  const std::size_t i = layout.vi_index(g.bus);
  const std::size_t q = layout.q_index(gen);
  const PvSourceEval e = eval_pv_source(pv_net_p(net, gen), pv_net_q(net, gen, x[q]), x[r], x[i], g.v_set);
  DeviceStamp s;
  s.add(r, r, e.dir_dvr);
  s.add(r, i, e.dir_dvi);
  s.add(r, q, e.dir_dq);
  s.add(i, r, e.dii_dvr);
  s.add(i, i, e.dii_dvi);
  s.add(i, q, e.dii_dq);
  s.add(q, r, e.dc_dvr);
  s.add(q, i, e.dc_dvi);
  s.add_residual(r, e.i_r);
  s.add_residual(i, e.i_i);
  s.add_residual(q, e.constraint);
  return s;
}

DeviceStamp stamp_poly_load(const NetworkModel& net, std::size_t k, const UnknownLayout& layout,
                            std::span<const double> x) {
  const std::size_t r = layout.vr_index(net.poly_loads[k].bus);
  const std::size_t i = layout.vi_index(net.poly_loads[k].bus);
  const InjectionEval e = eval_polynomial_injection(net.scheduled_poly(k), x[r], x[i]);
  DeviceStamp s;
  s.add(r, r, -e.dir_dvr);
  s.add(r, i, -e.dir_dvi);
  s.add(i, r, -e.dii_dvr);
  s.add(i, i, -e.dii_dvi);
  s.add_residual(r, -e.i_r);
  s.add_residual(i, -e.i_i);
  return s;
}

}  // namespace ivpf
