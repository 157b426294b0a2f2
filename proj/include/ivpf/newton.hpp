#pragma once

// Global Newton-Raphson over the split-circuit unknowns.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Sparse>

#include "ivpf/network.hpp"
#include "ivpf/simd/injection_kernels.hpp"
#include "ivpf/split_circuit.hpp"

namespace ivpf {

struct SolverOptions {
  double tol = 1e-6;  // infinity norm of the full residual
  int max_iter = 100;
  bool flat_start = true;
  double q_init = 0.0;                // initial Q for every PV generator, pu
  std::vector<double> q_init_per_gen; // overrides q_init when non-empty
  bool enable_limiting = true;
  bool enable_stepping = true;
  double voltage_box = 2.0;  // bound on |Vr| and |Vi|, pu
  double delta_max = 0.1;    // largest undamped PV voltage step, pu
  double alpha_min = 0.05;

  // Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

enum class SolveStatus { Converged, Diverged, MaxIterations, SingularSystem };

std::string_view to_string(SolveStatus status);

struct IterationRecord {
  int k = 0;
  double max_v = 0;          // largest bus |V| after the step
  double max_component = 0;  // largest |Vr| or |Vi| after the step
  double residual = 0;       // infinity norm after the step
  double alpha = 1;          // smallest limiter factor applied in the step
  double beta = 1;           // power-stepping factor in effect
};

struct ConvergenceTrace {
  std::vector<IterationRecord> records;

  std::size_t size() const { return records.size(); }
  void append(const ConvergenceTrace& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
  }
};

struct StateVector {
  std::vector<double> x;
  int k = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::MaxIterations;
  StateVector state;
  int iterations = 0;
  double residual_norm = 0;
  double beta = 1;  // last continuation factor solved for
  ConvergenceTrace trace;
};

class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SparseSystem {
  Eigen::SparseMatrix<double> jacobian;
  Eigen::VectorXd residual;
};

// Flat start: Vr = 1 (setpoint magnitude at PV and slack buses, slack angle
// applied), Vi = 0, Q per options, slack currents 0.
StateVector flat_start(const NetworkModel& net, const UnknownLayout& layout, const SolverOptions& options);

// Residual f(x) and Jacobian df/dx. Throws VoltageCollapse.
SparseSystem assemble(const NetworkModel& net, const UnknownLayout& layout, std::span<const double> x,
                      const simd::KernelTable& kernels = simd::active_kernels());

// Linear part only (branches, shunts, slack): J_lin and the constant term.
SparseSystem assemble_linear(const NetworkModel& net, const UnknownLayout& layout);

// Solves J dx = -f. Throws SingularSystem when a pivot falls below 1e-12
// relative to the largest entry of J.
Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& jacobian, const Eigen::VectorXd& residual);

double max_abs(std::span<const double> v);

// Plain or limited Newton from the given state. Never throws for numerical
// failure; the outcome is in SolveResult::status. beta only labels the trace.
SolveResult run_newton(const NetworkModel& net, const SolverOptions& options, const StateVector& initial,
                       double beta = 1.0);

}  // namespace ivpf
