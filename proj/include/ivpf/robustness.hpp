#pragma once

// Globalization: voltage limiting on PV buses and power-stepping
// continuation, plus the escalating robust solve.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ivpf/network.hpp"
#include "ivpf/newton.hpp"
#include "ivpf/split_circuit.hpp"

namespace ivpf {

enum class LimitTrigger { None, StepTooLarge, OutOfBox };

struct LimiterDecision {
  std::size_t bus = 0;
  double alpha = 1.0;
  LimitTrigger trigger = LimitTrigger::None;
};

struct LimitedStep {
  std::vector<double> step;
  std::vector<LimiterDecision> decisions;  // every PV bus, plus any bus the box rule touched
  double min_alpha = 1.0;
};

// Damps the (Vr, Vi) components of the Newton step at PV buses by
//   alpha = clamp(delta_max / max(|dVr|, |dVi|), alpha_min, 1)
// and then shrinks alpha at any bus whose post-step component would leave
// the box |V_C| <= voltage_box so the step lands on the boundary. The box
// rule may take alpha below alpha_min. Q and slack-current components pass
// through unchanged.
LimitedStep limit_step(std::span<const double> step, std::span<const double> x, const UnknownLayout& layout,
                       const NetworkModel& net, const SolverOptions& options);

// Clips bus voltage components that crossed the box by rounding only.
void clip_to_box(std::span<double> x, std::span<const double> before, const UnknownLayout& layout,
                 double box);

// P of PV generators and P, Q of loads scaled by beta. Polynomial-load
// coefficients scale too. Slack bus, shunts and branches untouched.
NetworkModel scale_injections(const NetworkModel& net, double beta);

struct HomotopySchedule {
  double beta = 0.0;
  double increment = 0.25;
  double min_increment = 1.0 / 64.0;

  double next() const { return beta + increment > 1.0 ? 1.0 : beta + increment; }
  void accept(double b) { beta = b; }
  // False once the increment would drop below min_increment.
  bool reject() {
    increment /= 2.0;
    return increment >= min_increment;
  }
};

// Continuation in beta from 0 to 1, each solve warm-started from the last
// accepted one. `initial` replaces the flat start of the beta = 0 solve.
SolveResult run_power_stepping(const NetworkModel& net, const SolverOptions& options,
                               const std::optional<StateVector>& initial = std::nullopt,
                               HomotopySchedule schedule = {});

// Newton (limited per options) first; escalates to power stepping on a
// failed status when stepping is enabled.
SolveResult solve_robust(const NetworkModel& net, const SolverOptions& options,
                         const std::optional<StateVector>& initial = std::nullopt);

}  // namespace ivpf
