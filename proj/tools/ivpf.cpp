// ivpf: solve, qinit-sweep, loading-sweep.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ivpf/harness.hpp"

namespace {

using ivpf::harness::RunConfig;

bool parse_switch(const std::string& v) { return v == "on"; }

void add_common(CLI::App* cmd, RunConfig& cfg, std::string& poly, std::string& limiting, std::string& stepping) {
  cmd->add_option("--case", cfg.case_path, "MATPOWER case file")->required();
  cmd->add_option("--poly-loads", poly, "polynomial load sidecar (JSON)");
  cmd->add_option("--tol", cfg.options.tol, "residual infinity-norm tolerance");
  cmd->add_option("--max-iter", cfg.options.max_iter, "Newton iteration cap");
  cmd->add_option("--limiting", limiting, "voltage limiting")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--stepping", stepping, "power stepping")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--q-init", cfg.options.q_init, "initial PV generator Q, pu");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--track-bus", cfg.track_bus, "0-based bus index recorded by the loading sweep");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split-circuit I-V power flow"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string poly;
  std::string limiting = "on";
  std::string stepping = "on";

  auto* solve = app.add_subcommand("solve", "solve one case, write solution.json and trace.csv");
  add_common(solve, cfg, poly, limiting, stepping);

  auto* qinit = app.add_subcommand("qinit-sweep", "four scenarios over random initial Q");
  add_common(qinit, cfg, poly, limiting, stepping);
  qinit->add_option("--seed", cfg.seed, "RNG seed");
  qinit->add_option("--n-inits", cfg.n_inits, "number of random initial Q values")->check(CLI::NonNegativeNumber);

  auto* loading = app.add_subcommand("loading-sweep", "four scenarios over increasing loading");
  add_common(loading, cfg, poly, limiting, stepping);
  loading->add_option("--lambda-max", cfg.lambda_max, "largest loading factor");
  loading->add_option("--lambda-step", cfg.lambda_step, "loading factor increment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ivpf::harness::kExitInputError;
  }

  if (!poly.empty()) cfg.poly_loads_path = poly;
  cfg.options.enable_limiting = parse_switch(limiting);
  cfg.options.enable_stepping = parse_switch(stepping);

  if (*solve) return ivpf::harness::cmd_solve(cfg, std::cerr);
  if (*qinit) return ivpf::harness::cmd_qinit_sweep(cfg, std::cerr);
  return ivpf::harness::cmd_loading_sweep(cfg, std::cerr);
}
