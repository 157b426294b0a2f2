#include "ivpf/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ivpf {

namespace {

// Largest alpha in [0, alpha] keeping v + alpha * d inside [-box, box].
double box_alpha(double v, double d, double alpha, double box) {
  if (std::abs(v + alpha * d) <= box) return alpha;
  const double target = d > 0 ? box : -box;
  return std::clamp((target - v) / d, 0.0, alpha);
}

}  // namespace

LimitedStep limit_step(std::span<const double> step, std::span<const double> x, const UnknownLayout& layout,
                       const NetworkModel& net, const SolverOptions& options) {
  LimitedStep out;
  out.step.assign(step.begin(), step.end());

  std::vector<bool> is_pv(layout.bus_count(), false);
  for (const PvGen& g : net.pv_gens) is_pv[g.bus] = true;

  for (std::size_t b = 0; b < layout.bus_count(); ++b) {
    const std::size_t r = layout.vr_index(b);
    const std::size_t i = layout.vi_index(b);
    LimiterDecision d{b, 1.0, LimitTrigger::None};

    if (is_pv[b]) {
      const double largest = std::max(std::abs(step[r]), std::abs(step[i]));
      if (largest > options.delta_max) {
        d.alpha = std::max(options.alpha_min, options.delta_max / largest);
        d.trigger = LimitTrigger::StepTooLarge;
      }
    }

    const double boxed = std::min(box_alpha(x[r], step[r], d.alpha, options.voltage_box),
                                  box_alpha(x[i], step[i], d.alpha, options.voltage_box));
    if (boxed < d.alpha) {
      d.alpha = boxed;
      d.trigger = LimitTrigger::OutOfBox;
    }

    if (d.alpha < 1.0) {
      out.step[r] *= d.alpha;
      out.step[i] *= d.alpha;
    }
    if (is_pv[b] || d.trigger != LimitTrigger::None) {
      out.decisions.push_back(d);
      out.min_alpha = std::min(out.min_alpha, d.alpha);
    }
  }
  return out;
}

void clip_to_box(std::span<double> x, std::span<const double> before, const UnknownLayout& layout,
                 double box) {
  for (std::size_t b = 0; b < layout.bus_count(); ++b) {
    for (std::size_t idx : {layout.vr_index(b), layout.vi_index(b)}) {
      if (std::abs(x[idx]) > box && std::abs(before[idx]) <= box) x[idx] = std::copysign(box, x[idx]);
    }
  }
}

NetworkModel scale_injections(const NetworkModel& net, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  NetworkModel out = net;
  out.beta *= beta;
  return out;
}

SolveResult run_power_stepping(const NetworkModel& net, const SolverOptions& options,
                               const std::optional<StateVector>& initial, HomotopySchedule schedule) {
  options.validate();
  const UnknownLayout layout = build_layout(net);
  const StateVector start = initial ? *initial : flat_start(net, layout, options);

  ConvergenceTrace trace;
  auto finish = [&trace](SolveResult r) {
    r.trace = trace;
    r.iterations = static_cast<int>(trace.size());
    r.state.k = r.iterations;
    return r;
  };

  schedule.beta = 0.0;
  SolveResult last = run_newton(scale_injections(net, 0.0), options, start, 0.0);
  trace.append(last.trace);
  if (last.status != SolveStatus::Converged) return finish(std::move(last));

  while (schedule.beta < 1.0) {
    const double b = schedule.next();
    SolveResult attempt = run_newton(scale_injections(net, b), options, last.state, b);
    trace.append(attempt.trace);
    if (attempt.status == SolveStatus::Converged) {
      schedule.accept(b);
      last = std::move(attempt);
    } else if (!schedule.reject()) {
      return finish(std::move(attempt));
    }
  }
  return finish(std::move(last));
}

SolveResult solve_robust(const NetworkModel& net, const SolverOptions& options,
                         const std::optional<StateVector>& initial) {
  options.validate();
  if (!initial && !options.flat_start) {
    throw std::invalid_argument("flat_start disabled but no initial state given");
  }
  const UnknownLayout layout = build_layout(net);
  const StateVector start = initial ? *initial : flat_start(net, layout, options);

  SolveResult direct = run_newton(net, options, start, 1.0);
  if (direct.status == SolveStatus::Converged || !options.enable_stepping) return direct;

  SolveResult stepped = run_power_stepping(net, options, start);
  ConvergenceTrace combined = direct.trace;
  combined.append(stepped.trace);
  stepped.trace = std::move(combined);
  stepped.iterations = static_cast<int>(stepped.trace.size());
  stepped.state.k = stepped.iterations;
  return stepped;
}

}  // namespace ivpf
