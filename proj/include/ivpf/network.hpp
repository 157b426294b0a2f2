#pragma once

// Per-unit grid description shared by the I-V solver and the polar oracle.

#include <array>
#include <cstddef>
#include <vector>

namespace ivpf {

enum class BusKind { Slack, PV, PQ };

struct Bus {
  std::size_t index = 0;   // dense 0-based position in NetworkModel::buses
  int external_id = 0;     // id from the case file, kept for reporting
  BusKind kind = BusKind::PQ;
  double p_load = 0.0;     // nominal pu, before loading/beta scaling
  double q_load = 0.0;
  double g_shunt = 0.0;    // pu at 1.0 pu voltage
  double b_shunt = 0.0;
  double v_set = 1.0;      // Slack/PV only
  double theta_set = 0.0;  // Slack only, radians

  bool operator==(const Bus&) const = default;
};

// Pi-model element. tap == 1 and shift == 0 is a plain line.
struct Branch {
  std::size_t from = 0;
  std::size_t to = 0;
  double series_r = 0.0;
  double series_x = 0.0;
  double charging_b = 0.0;
  double tap = 1.0;
  double shift = 0.0;  // radians
  bool in_service = true;

  bool operator==(const Branch&) const = default;
};

// Aggregated generator at a PV bus. Reactive output is a solver unknown.
struct PvGen {
  std::size_t bus = 0;
  double p_gen = 0.0;
  double v_set = 1.0;

  bool operator==(const PvGen&) const = default;
};

// Current-form semi-empirical injection
//   I_C = g1 + g2 Vr + g3 Vi + g4 Vr Vi + g5 Vr^2 + g6 Vi^2,  C in {R, I}
// drawn from the bus.
struct PolyLoadCoeffs {
  std::array<double, 6> g_real{};
  std::array<double, 6> g_imag{};

  bool operator==(const PolyLoadCoeffs&) const = default;
};

struct PolyLoad {
  std::size_t bus = 0;
  PolyLoadCoeffs coeffs;

  bool operator==(const PolyLoad&) const = default;
};

// Scheduled injections are the nominal values times two factors kept as
// fields, so repeated scaling composes exactly: `loading` (load sweep) and
// `beta` (power stepping). Read them through the scheduled_* accessors.
struct NetworkModel {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<PvGen> pv_gens;
  std::vector<PolyLoad> poly_loads;
  double loading = 1.0;  // scales non-slack loads and PV real power
  double beta = 1.0;     // scales the same plus polynomial loads

  std::size_t slack_bus() const;
  std::size_t bus_count() const { return buses.size(); }

  double injection_factor() const { return loading * beta; }
  double scheduled_p_load(std::size_t bus) const;
  double scheduled_q_load(std::size_t bus) const;
  double scheduled_p_gen(std::size_t gen) const { return pv_gens[gen].p_gen * injection_factor(); }
  PolyLoadCoeffs scheduled_poly(std::size_t k) const;

  bool operator==(const NetworkModel&) const = default;
};

}  // namespace ivpf
