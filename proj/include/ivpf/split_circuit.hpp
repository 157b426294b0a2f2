#pragma once

// Split real/imaginary equivalent-circuit devices.
//
// Residual convention, per bus KCL row pair:
//   f = (source injections) - (load draws) - (Y V)
// so generator and slack currents enter with +1 and every network or load
// current leaving the node enters with -1. Constraint rows (PV magnitude,
// slack voltage) sit at the row index of the unknown they introduce.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivpf/network.hpp"

namespace ivpf {

// |V|^2 below this is treated as a collapsed voltage.
inline constexpr double kVoltageGuard = 1e-8;

class VoltageCollapse : public std::runtime_error {
 public:
  explicit VoltageCollapse(double mag2)
      : std::runtime_error("VoltageCollapse: |V|^2 = " + std::to_string(mag2) + " below guard"),
        mag2_(mag2) {}
  double mag2() const noexcept { return mag2_; }

 private:
  double mag2_;
};

// Unknown ordering: all Vr by bus, all Vi by bus, Q per PV generator, then
// (Ir, Ii) per slack source.
class UnknownLayout {
 public:
  UnknownLayout() = default;
  UnknownLayout(std::size_t n_bus, std::size_t n_pv, std::vector<std::size_t> slack_buses)
      : n_bus_(n_bus), n_pv_(n_pv), slack_buses_(std::move(slack_buses)) {}

  std::size_t vr_index(std::size_t bus) const { return bus; }
  std::size_t vi_index(std::size_t bus) const { return n_bus_ + bus; }
  std::size_t q_index(std::size_t pv_gen) const { return 2 * n_bus_ + pv_gen; }
  std::size_t slack_ir_index(std::size_t slack = 0) const { return 2 * n_bus_ + n_pv_ + 2 * slack; }
  std::size_t slack_ii_index(std::size_t slack = 0) const { return slack_ir_index(slack) + 1; }

  std::size_t bus_count() const { return n_bus_; }
  std::size_t pv_count() const { return n_pv_; }
  std::size_t slack_count() const { return slack_buses_.size(); }
  const std::vector<std::size_t>& slack_buses() const { return slack_buses_; }
  std::size_t size() const { return 2 * n_bus_ + n_pv_ + 2 * slack_buses_.size(); }

  bool operator==(const UnknownLayout&) const = default;

 private:
  std::size_t n_bus_ = 0;
  std::size_t n_pv_ = 0;
  std::vector<std::size_t> slack_buses_;
};

class ZeroImpedance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

UnknownLayout build_layout(const NetworkModel& net);

struct JacobianEntry {
  std::size_t row, col;
  double value;
};

struct ResidualEntry {
  std::size_t row;
  double value;
};

// Additive contribution of one device. For state-independent stamps
// (branches, shunts, slack) residual_entries carry only the constant term;
// the linear part is jacobian_entries applied to the state.
struct DeviceStamp {
  std::vector<JacobianEntry> jacobian_entries;
  std::vector<ResidualEntry> residual_entries;

  void add(std::size_t row, std::size_t col, double value) { jacobian_entries.push_back({row, col, value}); }
  void add_residual(std::size_t row, double value) { residual_entries.push_back({row, value}); }
};

struct InjectionEval {
  double i_r = 0, i_i = 0;
  double dir_dvr = 0, dir_dvi = 0;
  double dii_dvr = 0, dii_dvi = 0;
};

struct PvSourceEval : InjectionEval {
  double dir_dq = 0, dii_dq = 0;
  double constraint = 0;  // Vr^2 + Vi^2 - Vset^2
  double dc_dvr = 0, dc_dvi = 0;
};

InjectionEval eval_pq_load(double p, double q, double vr, double vi);
PvSourceEval eval_pv_source(double p_g, double q_g, double vr, double vi, double v_set);
InjectionEval eval_polynomial_injection(const PolyLoadCoeffs& c, double vr, double vi);

// Net scheduled power of a PV source after subtracting the bus's own load.
double pv_net_p(const NetworkModel& net, std::size_t gen);
double pv_net_q(const NetworkModel& net, std::size_t gen, double q_gen);

// Linear stamps.
DeviceStamp stamp_branch(const Branch& br, const UnknownLayout& layout);
DeviceStamp stamp_shunt(const Bus& bus, const UnknownLayout& layout);
DeviceStamp stamp_slack(const Bus& bus, const UnknownLayout& layout);

// Nonlinear stamps at a state (Jacobian entries plus the device's residual).
DeviceStamp stamp_pq_load(const NetworkModel& net, std::size_t bus, const UnknownLayout& layout, std::span<const double> x);
DeviceStamp stamp_pv_source(const NetworkModel& net, std::size_t gen, const UnknownLayout& layout,
                            std::span<const double> x);
DeviceStamp stamp_poly_load(const NetworkModel& net, std::size_t k, const UnknownLayout& layout, std::span<const double> x);

// Buses that carry a constant-power load device: non-PV buses with a
// nonzero scheduled load. PV-bus load is netted into the PV source.
bool has_pq_device(const NetworkModel& net, std::size_t bus);

}  // namespace ivpf
