// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "ivpf/case_io.hpp"
#include "ivpf/harness.hpp"
#include "ivpf/oracle.hpp"
#include "ivpf/robustness.hpp"

using namespace ivpf;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.require(secs < limit_s, "runtime over " + std::to_string(limit_s) + " s");
  if (!out.pass) ++failures;
  std::printf("%s criterion %d: %s (%.3f s)%s\n", out.pass ? "PASS" : "FAIL", id, title, secs,
              out.detail.str().c_str());
  std::fflush(stdout);
}

double max_phasor_gap(const std::vector<Phasor>& a, const std::vector<Phasor>& b) {
  if (a.size() != b.size()) return INFINITY;
  double w = 0;
  for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::abs(a[i] - b[i]));
  return w;
}

// Largest |Vr| or |Vi| over every iterate of every limiting-enabled run, and
// whether some limiting-disabled run at q_init = 10 left the box.
struct BoxLedger {
  double limited_max = 0;
  int limited_runs = 0;
  bool unlimited_exceeded = false;
  int unlimited_runs = 0;

  void add(const harness::SweepRow& row, double q_init) {
    if (row.limiting) {
      limited_max = std::max(limited_max, row.max_trace_component);
      ++limited_runs;
    } else if (q_init == 10.0) {
      ++unlimited_runs;
      if (row.max_trace_component > SolverOptions{}.voltage_box) unlimited_exceeded = true;
    }
  }
};

BoxLedger box_ledger;

constexpr double kLoadingSweepQInit = 10.0;

}  // namespace

int main() {
  const NetworkModel case14 = fixtures::case14();
  const NetworkModel case2 = fixtures::case2();

  criterion(1, "analytic Jacobian matches central finite differences (2-bus, IEEE 14-bus, 20 states each)", 10.0,
            [&](Outcome& out) {
              std::mt19937_64 rng(20240601);
              int nonzeros = 0, bad = 0;
              double worst = 0;
              for (const NetworkModel* net : {&case2, &case14}) {
                const UnknownLayout layout = build_layout(*net);
                for (int t = 0; t < 20; ++t) {
                  const std::vector<double> x = fixtures::random_state(rng, layout);
                  const Eigen::MatrixXd j = Eigen::MatrixXd(assemble(*net, layout, x).jacobian);
                  const auto c = fixtures::compare_jacobian(j, fixtures::fd_jacobian(*net, layout, x, 1e-7), 1e-5);
                  nonzeros += c.nonzeros;
                  bad += c.failures;
                  worst = std::max(worst, c.worst_rel);
                }
              }
              out.detail << " nonzeros=" << nonzeros << " worst_rel=" << worst;
              out.require(bad == 0, std::to_string(bad) + " entries off");
            });

  criterion(2, "IEEE 14-bus robust solve agrees with the polar reference", 1.0, [&](Outcome& out) {
    const SolveResult r = solve_robust(case14, SolverOptions{});
    const PolarSolution p = polar_nr_reference(case14);
    out.require(r.status == SolveStatus::Converged, "robust solve did not converge");
    out.require(p.converged, "polar reference did not converge");
    const std::vector<Phasor> v = bus_voltages(case14, r.state.x);
    double dv = 0, dth = 0;
    for (std::size_t b = 0; b < v.size(); ++b) {
      dv = std::max(dv, std::abs(std::abs(v[b]) - std::abs(p.voltages[b])));
      dth = std::max(dth, std::abs(std::arg(v[b] / p.voltages[b])));
    }
    const double mm = power_mismatch(case14, v).max_mismatch();
    out.detail << " max_dV=" << dv << " max_dtheta=" << dth << " mismatch=" << mm;
    out.require(dv < 1e-6, "|dV|");
    out.require(dth < 1e-6, "|dtheta|");
    out.require(mm < 1e-6, "mismatch");
    harness::SweepRow row;
    row.limiting = true;
    for (const IterationRecord& rec : r.trace.records) row.max_trace_component = std::max(row.max_trace_component, rec.max_component);
    box_ledger.add(row, 0.0);
  });

  criterion(3, "20 random initial Q: both techniques all correct and identical; no techniques fails at least once", 30.0,
            [&](Outcome& out) {
              harness::RunConfig cfg;
              cfg.seed = 1;
              cfg.n_inits = 20;
              const harness::SweepReport rep = harness::qinit_sweep(case14, cfg);
              std::vector<const harness::SweepRow*> s4;
              int s1_bad = 0, s4_ok = 0;
              for (const harness::SweepRow& row : rep.rows) {
                box_ledger.add(row, row.param);
                if (row.scenario == 1 && row.label != SolutionLabel::CorrectPhysical) ++s1_bad;
                if (row.scenario == 4) {
                  s4.push_back(&row);
                  if (row.label == SolutionLabel::CorrectPhysical) ++s4_ok;
                }
              }
              double gap = 0;
              for (std::size_t a = 0; a < s4.size(); ++a) {
                for (std::size_t b = a + 1; b < s4.size(); ++b) gap = std::max(gap, max_phasor_gap(s4[a]->voltages, s4[b]->voltages));
              }
              out.detail << " scenario4_correct=" << s4_ok << "/" << s4.size() << " pairwise_gap=" << gap
                         << " scenario1_failed_or_wrong=" << s1_bad;
              out.require(s4.size() == 20 && s4_ok == 20, "scenario 4 not 20/20");
              out.require(gap < 1e-6, "scenario 4 solutions differ");
              out.require(s1_bad >= 1, "scenario 1 never failed");
            });

  criterion(4, "loading sweep 1.0..4.0: scenario 4 sound and monotone, scenario 1 fails somewhere scenario 4 succeeds",
            60.0, [&](Outcome& out) {
              harness::RunConfig cfg;
              cfg.options.q_init = kLoadingSweepQInit;
              const harness::SweepReport rep = harness::loading_sweep(case14, cfg);
              std::map<double, SolutionLabel> s1, s4;
              std::vector<std::pair<double, double>> tracked;
              int s4_converged = 0, s4_unsound = 0;
              for (const harness::SweepRow& row : rep.rows) {
                box_ledger.add(row, cfg.options.q_init);
                if (row.scenario == 1) s1[row.param] = row.label;
                if (row.scenario != 4) continue;
                s4[row.param] = row.label;
                if (row.status == SolveStatus::Converged) {
                  ++s4_converged;
                  const bool in_band = std::all_of(row.voltages.begin(), row.voltages.end(), [](const Phasor& v) {
                    return std::abs(v) >= kPhysicalVMin && std::abs(v) <= kPhysicalVMax;
                  });
                  if (!(row.mismatch < 1e-6) || !in_band) ++s4_unsound;
                }
                if (row.label == SolutionLabel::CorrectPhysical) tracked.emplace_back(row.param, row.tracked_v);
              }
              int contrast = 0;
              for (const auto& [lam, label] : s1) {
                if (label != SolutionLabel::CorrectPhysical && s4[lam] == SolutionLabel::CorrectPhysical) ++contrast;
              }
              // |V| is only determined to the solve tolerance.
              bool monotone = true;
              for (std::size_t k = 1; k < tracked.size(); ++k) {
                if (tracked[k].second > tracked[k - 1].second + cfg.options.tol) monotone = false;
              }
              out.detail << " q_init=" << kLoadingSweepQInit << " lambdas=" << s4.size()
                         << " scenario4_converged=" << s4_converged << " unsound=" << s4_unsound
                         << " contrast_points=" << contrast << " tracked_v=[" << (tracked.empty() ? 0 : tracked.front().second)
                         << " .. " << (tracked.empty() ? 0 : tracked.back().second) << "]";
              out.require(s4.size() == 13, "expected 13 loading factors");
              out.require(s4_unsound == 0, "unsound scenario 4 run");
              out.require(contrast >= 1, "no loading where scenario 1 fails and scenario 4 succeeds");
              out.require(monotone, "tracked |V| increases");
            });

  criterion(5, "limiting keeps every iterate in the box; without it q_init = 10 leaves the box", 30.0, [&](Outcome& out) {
    SolverOptions off;
    off.q_init = 10.0;
    off.enable_limiting = false;
    off.enable_stepping = false;
    box_ledger.add(harness::solve_row(case14, off, 1, 10.0, 2), 10.0);
    SolverOptions on = off;
    on.enable_limiting = true;
    box_ledger.add(harness::solve_row(case14, on, 3, 10.0, 2), 10.0);
    out.detail << " limited_runs=" << box_ledger.limited_runs << " limited_max=" << box_ledger.limited_max
               << " unlimited_q10_runs=" << box_ledger.unlimited_runs
               << " unlimited_exceeded=" << (box_ledger.unlimited_exceeded ? "yes" : "no");
    out.require(box_ledger.limited_max <= SolverOptions{}.voltage_box, "limited iterate outside the box");
    out.require(box_ledger.unlimited_exceeded, "no unlimited q_init = 10 run left the box");
  });

  criterion(6, "power-stepping identities and polar Jacobian invariance under scaling", 5.0, [&](Outcome& out) {
    const NetworkModel net = fixtures::case14_poly();
    out.require(scale_injections(net, 1.0) == net, "beta = 1 not identity");
    const NetworkModel zero = scale_injections(net, 0.0);
    bool zeroed = true;
    for (std::size_t b = 0; b < net.bus_count(); ++b) {
      if (net.buses[b].kind == BusKind::Slack) continue;
      zeroed = zeroed && zero.scheduled_p_load(b) == 0.0 && zero.scheduled_q_load(b) == 0.0;
    }
    for (std::size_t g = 0; g < net.pv_gens.size(); ++g) zeroed = zeroed && zero.scheduled_p_gen(g) == 0.0;
    out.require(zeroed, "beta = 0 left nonzero injections");

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int composed = 0;
    for (int t = 0; t < 200; ++t) {
      const double a = u(rng), b = u(rng);
      if (scale_injections(scale_injections(net, a), b) == scale_injections(net, a * b)) ++composed;
    }
    out.require(composed == 200, "composition not exact");

    std::vector<Phasor> v(case14.bus_count());
    for (std::size_t b = 0; b < v.size(); ++b) v[b] = std::polar(0.95 + 0.01 * static_cast<double>(b % 5), -0.03 * static_cast<double>(b));
    const Eigen::MatrixXd j1 = polar_jacobian(case14, v);
    bool invariant = true;
    for (double beta : {0.0, 0.25, 0.5, 0.75}) invariant = invariant && polar_jacobian(scale_injections(case14, beta), v) == j1;
    out.require(invariant, "polar Jacobian changed with beta");
    out.detail << " compositions_exact=" << composed << "/200";
  });

  criterion(7, "2-bus zero-load case is exact at the flat state", 1.0, [&](Outcome& out) {
    const SolveResult r = solve_robust(case2, SolverOptions{});
    const UnknownLayout layout = build_layout(case2);
    out.detail << " status=" << to_string(r.status) << " iterations=" << r.iterations << " residual=" << r.residual_norm;
    out.require(r.status == SolveStatus::Converged, "not converged");
    out.require(r.residual_norm == 0.0, "residual not exactly 0");
    out.require(r.iterations <= 1, "more than one iteration");
    out.require(r.state.x[layout.slack_ir_index()] == 0.0 && r.state.x[layout.slack_ii_index()] == 0.0,
                "slack currents not 0");
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
