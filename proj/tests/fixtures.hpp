#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ivpf/case_io.hpp"
#include "ivpf/newton.hpp"
#include "ivpf/split_circuit.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return IVPF_DATA_DIR; }

inline ivpf::NetworkModel case14() { return ivpf::build_network(ivpf::read_matpower_file(data_dir() / "case14.m")); }
inline ivpf::NetworkModel case2() { return ivpf::build_network(ivpf::read_matpower_file(data_dir() / "case2_zero.m")); }
inline ivpf::NetworkModel case14_poly() { return ivpf::with_poly_loads(case14(), data_dir() / "case14_poly.json"); }

// Slack at bus 1, PQ load at bus 2 over a lossless x = 0.1 line. P = 4 pu
// gives |V2|^2 = 0.8 or 0.2.
inline std::string two_bus_loaded_text(double pd_mw = 400.0) {
  return "mpc.baseMVA = 100;\n"
         "mpc.bus = [\n"
         " 1 3 0 0 0 0 1 1 0 138 1 1.1 0.9;\n"
         " 2 1 " + std::to_string(pd_mw) + " 0 0 0 1 1 0 138 1 1.1 0.9;\n"
         "];\n"
         "mpc.gen = [\n"
         " 1 0 0 100 -100 1 100 1 100 0;\n"
         "];\n"
         "mpc.branch = [\n"
         " 1 2 0 0.1 0 0 0 0 0 0 1 -360 360;\n"
         "];\n";
}

// Uniform state inside |V_C| <= 2, |Q| <= 10, slack currents <= 10.
inline std::vector<double> random_state(std::mt19937_64& rng, const ivpf::UnknownLayout& layout) {
  std::uniform_real_distribution<double> v(-2.0, 2.0), q(-10.0, 10.0);
  std::vector<double> x(layout.size());
  for (std::size_t b = 0; b < layout.bus_count(); ++b) {
    x[layout.vr_index(b)] = v(rng);
    x[layout.vi_index(b)] = v(rng);
  }
  for (std::size_t g = 0; g < layout.pv_count(); ++g) x[layout.q_index(g)] = q(rng);
  for (std::size_t s = 0; s < layout.slack_count(); ++s) {
    x[layout.slack_ir_index(s)] = q(rng);
    x[layout.slack_ii_index(s)] = q(rng);
  }
  return x;
}

inline Eigen::VectorXd residual(const ivpf::NetworkModel& net, const ivpf::UnknownLayout& layout,
                                std::span<const double> x) {
  return ivpf::assemble(net, layout, x).residual;
}

// Central-difference Jacobian of the full residual.
inline Eigen::MatrixXd fd_jacobian(const ivpf::NetworkModel& net, const ivpf::UnknownLayout& layout,
                                   std::vector<double> x, double h = 1e-7) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd j(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double x0 = x[c];
    x[c] = x0 + h;
    const Eigen::VectorXd fp = residual(net, layout, x);
    x[c] = x0 - h;
    const Eigen::VectorXd fm = residual(net, layout, x);
    x[c] = x0;
    j.col(c) = (fp - fm) / (2.0 * h);
  }
  return j;
}

struct JacobianCheck {
  int nonzeros = 0;
  int failures = 0;
  double worst_rel = 0;
};

// Every nonzero analytic entry within rel of the finite difference; every
// structural zero with a finite difference below abs_zero.
inline JacobianCheck compare_jacobian(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd, double rel,
                                      double abs_zero = 1e-6) {
  JacobianCheck out;
  for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
    for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
      const double a = analytic(r, c), d = fd(r, c);
      if (a != 0.0) {
        ++out.nonzeros;
        const double e = std::abs(a - d) / std::abs(a);
        out.worst_rel = std::max(out.worst_rel, e);
        if (!(e <= rel)) ++out.failures;
      } else if (!(std::abs(d) <= abs_zero)) {
        ++out.failures;
      }
    }
  }
  return out;
}

}  // namespace fixtures
