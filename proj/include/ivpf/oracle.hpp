#pragma once

// Independent checks in the conventional polar/complex-power setting. Nothing
// here calls into the split-circuit stamps or the I-V assembler.

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ivpf/network.hpp"
#include "ivpf/newton.hpp"

namespace ivpf {

using Phasor = std::complex<double>;

// Dense complex bus admittance matrix (MATPOWER branch model).
Eigen::MatrixXcd dense_ybus(const NetworkModel& net);

// Bus voltage phasors read out of an I-V state vector.
std::vector<Phasor> bus_voltages(const NetworkModel& net, std::span<const double> x);

struct MismatchReport {
  std::vector<double> dp;     // per bus, 0 at the slack
  std::vector<double> dq;     // per bus, PQ buses only
  std::vector<double> dv;     // |V| - Vset at PV buses
  std::vector<double> v_mag;  // per bus
  double max_p_mismatch = 0;
  double max_q_mismatch = 0;
  double max_v_deviation = 0;

  double max_mismatch() const;
};

MismatchReport power_mismatch(const NetworkModel& net, std::span<const Phasor> voltages);

struct PolarSolution {
  std::vector<Phasor> voltages;
  bool converged = false;
  int iterations = 0;
  double mismatch = 0;
};

// Classic polar Newton on P (non-slack) and Q (PQ) mismatches, flat start,
// dense LU. Throws std::invalid_argument for networks with polynomial loads.
PolarSolution polar_nr_reference(const NetworkModel& net, double tol = 1e-10, int max_iter = 50);

// d[P_non-slack; Q_PQ] / d[theta_non-slack; |V|_PQ] at the given voltages.
Eigen::MatrixXd polar_jacobian(const NetworkModel& net, std::span<const Phasor> voltages);

enum class SolutionLabel { CorrectPhysical, WrongSolution, Failed };

std::string_view to_string(SolutionLabel label);

struct SolutionClass {
  SolutionLabel label = SolutionLabel::Failed;
  std::string reason;
  double mismatch = 0;
};

inline constexpr double kPhysicalVMin = 0.5;
inline constexpr double kPhysicalVMax = 1.5;

SolutionClass classify_solution(const SolveResult& result, const NetworkModel& net, double tol = 1e-6);

}  // namespace ivpf
