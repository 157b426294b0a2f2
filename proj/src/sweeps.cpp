#include "ivpf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "ivpf/case_io.hpp"
#include "ivpf/robustness.hpp"

namespace ivpf::harness {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

const char* on_off(bool b) { return b ? "on" : "off"; }

// Runs fn(i) for i in [0, n) on a small pool; results land by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

bool write_file(const std::filesystem::path& path, const std::string& text, std::ostream& err) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    err << "error: cannot write " << path.string() << "\n";
    return false;
  }
  return true;
}

SolverOptions scenario_options(SolverOptions base, const Scenario& s) {
  base.enable_limiting = s.limiting;
  base.enable_stepping = s.stepping;
  return base;
}

}  // namespace

const std::vector<Scenario>& four_scenarios() {
  static const std::vector<Scenario> all{{1, false, false}, {2, false, true}, {3, true, false}, {4, true, true}};
  return all;
}

void SweepReport::write_csv(std::ostream& out) const {
  out << "scenario,param,limiting,stepping,status,iters,max_v,mismatch,class";
  if (with_tracked_bus) out << ",tracked_v";
  out << "\n";
  for (const SweepRow& r : rows) {
    out << r.scenario << ',' << num(r.param) << ',' << on_off(r.limiting) << ',' << on_off(r.stepping) << ','
        << to_string(r.status) << ',' << r.iterations << ',' << num(r.max_v) << ',' << num(r.mismatch) << ','
        << to_string(r.label);
    if (with_tracked_bus) out << ',' << num(r.tracked_v);
    out << "\n";
  }
}

NetworkModel load_network(const RunConfig& config) {
  NetworkModel net = build_network(read_matpower_file(config.case_path));
  if (config.poly_loads_path) net = with_poly_loads(std::move(net), *config.poly_loads_path);
  return net;
}

SweepRow solve_row(const NetworkModel& net, const SolverOptions& options, int scenario, double param,
                   std::size_t track_bus) {
  SweepRow row;
  row.scenario = scenario;
  row.param = param;
  row.limiting = options.enable_limiting;
  row.stepping = options.enable_stepping;

  const SolveResult result = solve_robust(net, options);
  const SolutionClass cls = classify_solution(result, net, options.tol);
  row.status = result.status;
  row.iterations = result.iterations;
  row.label = cls.label;
  row.mismatch = cls.mismatch;
  for (const IterationRecord& rec : result.trace.records) {
    row.max_trace_component = std::max(row.max_trace_component, rec.max_component);
  }
  if (std::all_of(result.state.x.begin(), result.state.x.end(), [](double v) { return std::isfinite(v); })) {
    row.voltages = bus_voltages(net, result.state.x);
    for (const Phasor& v : row.voltages) row.max_v = std::max(row.max_v, std::abs(v));
    if (track_bus < row.voltages.size()) row.tracked_v = std::abs(row.voltages[track_bus]);
  } else {
    row.max_v = std::numeric_limits<double>::infinity();
    row.tracked_v = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

std::vector<double> draw_q_inits(std::uint64_t seed, int n, double low, double high) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(low, high);
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)));
  for (double& q : out) q = dist(rng);
  return out;
}

SweepReport qinit_sweep(const NetworkModel& net, const RunConfig& config) {
  if (net.pv_gens.empty()) throw std::invalid_argument("q-init sweep needs at least one PV bus");
  const std::vector<double> qs = draw_q_inits(config.seed, config.n_inits, config.q_low, config.q_high);
  const auto& scenarios = four_scenarios();

  SweepReport report;
  report.rows.resize(scenarios.size() * qs.size());
  parallel_for(report.rows.size(), [&](std::size_t idx) {
    const Scenario& s = scenarios[idx / qs.size()];
    SolverOptions opts = scenario_options(config.options, s);
    opts.q_init = qs[idx % qs.size()];
    opts.q_init_per_gen.clear();
    report.rows[idx] = solve_row(net, opts, s.id, opts.q_init, config.track_bus);
  });
  return report;
}

SweepReport loading_sweep(const NetworkModel& net, const RunConfig& config) {
  if (config.track_bus >= net.bus_count()) throw std::invalid_argument("tracked bus out of range");
  if (!(config.lambda_step > 0)) throw std::invalid_argument("lambda step must be positive");
  std::vector<double> lambdas;
  for (int i = 0;; ++i) {
    const double lam = config.lambda_min + i * config.lambda_step;
    if (lam > config.lambda_max + 1e-12) break;
    lambdas.push_back(lam);
  }
  std::vector<NetworkModel> loaded;
  loaded.reserve(lambdas.size());
  for (double lam : lambdas) loaded.push_back(apply_loading(net, lam));

  const auto& scenarios = four_scenarios();
  SweepReport report;
  report.with_tracked_bus = true;
  report.rows.resize(scenarios.size() * lambdas.size());
  parallel_for(report.rows.size(), [&](std::size_t idx) {
    const Scenario& s = scenarios[idx / lambdas.size()];
    const std::size_t li = idx % lambdas.size();
    report.rows[idx] = solve_row(loaded[li], scenario_options(config.options, s), s.id, lambdas[li], config.track_bus);
  });
  return report;
}

void write_trace_csv(const ConvergenceTrace& trace, std::ostream& out) {
  out << "k,max_v,residual,alpha,beta\n";
  for (const IterationRecord& r : trace.records) {
    out << r.k << ',' << num(r.max_v) << ',' << num(r.residual) << ',' << num(r.alpha) << ',' << num(r.beta)
        << "\n";
  }
}

std::string solution_json(const NetworkModel& net, const SolveResult& result, const SolutionClass& cls) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["status"] = std::string(to_string(result.status));
  j["class"] = std::string(to_string(cls.label));
  j["reason"] = cls.reason;
  j["iterations"] = result.iterations;
  j["residual"] = std::isfinite(result.residual_norm) ? ordered_json(result.residual_norm) : ordered_json(nullptr);
  j["mismatch"] = std::isfinite(cls.mismatch) ? ordered_json(cls.mismatch) : ordered_json(nullptr);

  ordered_json buses = ordered_json::array();
  ordered_json gens = ordered_json::array();
  const bool finite =
      std::all_of(result.state.x.begin(), result.state.x.end(), [](double v) { return std::isfinite(v); });
  if (finite && !result.state.x.empty()) {
    const UnknownLayout layout = build_layout(net);
    const auto& x = result.state.x;
    for (std::size_t b = 0; b < net.bus_count(); ++b) {
      const double vr = x[layout.vr_index(b)];
      const double vi = x[layout.vi_index(b)];
      buses.push_back({{"bus", net.buses[b].external_id},
                       {"vr", vr},
                       {"vi", vi},
                       {"vm", std::hypot(vr, vi)},
                       {"theta_rad", std::atan2(vi, vr)}});
    }
    for (std::size_t g = 0; g < net.pv_gens.size(); ++g) {
      gens.push_back({{"bus", net.buses[net.pv_gens[g].bus].external_id},
                      {"q_gen_mvar", x[layout.q_index(g)] * net.base_mva},
                      {"q_gen_pu", x[layout.q_index(g)]}});
    }
  }
  j["buses"] = std::move(buses);
  j["generators"] = std::move(gens);
  return j.dump(2) + "\n";
}

int cmd_solve(const RunConfig& config, std::ostream& err) {
  NetworkModel net;
  try {
    net = load_network(config);
    config.options.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  SolveResult result;
  try {
    result = solve_robust(net, config.options);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  const SolutionClass cls = classify_solution(result, net, config.options.tol);

  std::ostringstream trace;
  write_trace_csv(result.trace, trace);
  if (!write_file(config.out_dir / "solution.json", solution_json(net, result, cls), err) ||
      !write_file(config.out_dir / "trace.csv", trace.str(), err)) {
    return kExitInputError;
  }
  if (cls.label != SolutionLabel::CorrectPhysical) {
    err << "solve: " << to_string(result.status) << ", " << to_string(cls.label) << ": " << cls.reason << "\n";
    return kExitSolveFailure;
  }
  return kExitCorrect;
}

namespace {

int run_sweep(const RunConfig& config, std::ostream& err, const char* file,
              SweepReport (*sweep)(const NetworkModel&, const RunConfig&)) {
  NetworkModel net;
  SweepReport report;
  try {
    net = load_network(config);
    config.options.validate();
    report = sweep(net, config);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  std::ostringstream csv;
  report.write_csv(csv);
  return write_file(config.out_dir / file, csv.str(), err) ? kExitCorrect : kExitInputError;
}

}  // namespace

int cmd_qinit_sweep(const RunConfig& config, std::ostream& err) {
  return run_sweep(config, err, "qinit_sweep.csv", &qinit_sweep);
}

int cmd_loading_sweep(const RunConfig& config, std::ostream& err) {
  return run_sweep(config, err, "loading_sweep.csv", &loading_sweep);
}

}  // namespace ivpf::harness
