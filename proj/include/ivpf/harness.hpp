#pragma once

// Experiment drivers behind the command-line tool: single solves and the two
// four-scenario sweeps (random initial Q, increasing loading).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ivpf/network.hpp"
#include "ivpf/newton.hpp"
#include "ivpf/oracle.hpp"

namespace ivpf::harness {

enum ExitCode : int { kExitCorrect = 0, kExitSolveFailure = 1, kExitInputError = 2 };

struct RunConfig {
  std::filesystem::path case_path;
  std::optional<std::filesystem::path> poly_loads_path;
  SolverOptions options;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
  std::size_t track_bus = 2;  // 0-based bus index
  double lambda_min = 1.0;
  double lambda_max = 4.0;
  double lambda_step = 0.25;
  int n_inits = 20;
  double q_low = -10.0;
  double q_high = 10.0;
};

struct Scenario {
  int id;
  bool limiting;
  bool stepping;
};

// 1: neither technique, 2: stepping only, 3: limiting only, 4: both.
const std::vector<Scenario>& four_scenarios();

struct SweepRow {
  int scenario = 0;
  double param = 0;  // q_init or loading factor
  bool limiting = false;
  bool stepping = false;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  double max_v = 0;  // largest bus |V| of the final state
  double mismatch = 0;
  SolutionLabel label = SolutionLabel::Failed;
  double tracked_v = 0;
  double max_trace_component = 0;  // largest |Vr|, |Vi| over all iterates
  std::vector<Phasor> voltages;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  bool with_tracked_bus = false;

  void write_csv(std::ostream& out) const;
};

// Loads the case (and sidecar) named in the config. Throws CaseError.
NetworkModel load_network(const RunConfig& config);

// Runs one robust solve and classifies it; the row's param is q_init.
SweepRow solve_row(const NetworkModel& net, const SolverOptions& options, int scenario, double param,
                   std::size_t track_bus);

std::vector<double> draw_q_inits(std::uint64_t seed, int n, double low, double high);

SweepReport qinit_sweep(const NetworkModel& net, const RunConfig& config);
SweepReport loading_sweep(const NetworkModel& net, const RunConfig& config);

void write_trace_csv(const ConvergenceTrace& trace, std::ostream& out);
std::string solution_json(const NetworkModel& net, const SolveResult& result, const SolutionClass& cls);

// Command entry points: write outputs under config.out_dir, report
// diagnostics on err, return the process exit code.
int cmd_solve(const RunConfig& config, std::ostream& err);
int cmd_qinit_sweep(const RunConfig& config, std::ostream& err);
int cmd_loading_sweep(const RunConfig& config, std::ostream& err);

}  // namespace ivpf::harness
