#include "ivpf/oracle.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ivpf/split_circuit.hpp"

namespace ivpf {

namespace {

// Scheduled complex power injected at each bus, excluding polynomial loads.
std::vector<Phasor> scheduled_injection(const NetworkModel& net) {
  std::vector<Phasor> s(net.buses.size());
  for (const Bus& b : net.buses) s[b.index] = -Phasor(net.scheduled_p_load(b.index), net.scheduled_q_load(b.index));
  for (std::size_t g = 0; g < net.pv_gens.size(); ++g) s[net.pv_gens[g].bus] += net.scheduled_p_gen(g);
  return s;
}

// Power drawn by polynomial loads at the given voltages.
std::vector<Phasor> polynomial_draw(const NetworkModel& net, std::span<const Phasor> v) {
  std::vector<Phasor> s(net.buses.size());
  for (std::size_t k = 0; k < net.poly_loads.size(); ++k) {
    const PolyLoadCoeffs c = net.scheduled_poly(k);
    const Phasor u = v[net.poly_loads[k].bus];
    const double vr = u.real(), vi = u.imag();
    auto eval = [&](const std::array<double, 6>& g) {
      return g[0] + g[1] * vr + g[2] * vi + g[3] * vr * vi + g[4] * vr * vr + g[5] * vi * vi;
    };
    const Phasor current(eval(c.g_real), eval(c.g_imag));
    s[net.poly_loads[k].bus] += u * std::conj(current);
  }
  return s;
}

struct PolarIndex {
  std::vector<int> theta;  // bus -> column of theta, -1 for slack
  std::vector<int> vmag;   // bus -> column of |V|, -1 unless PQ
  int size = 0;
};

PolarIndex polar_index(const NetworkModel& net) {
  PolarIndex idx;
  const std::size_t n = net.buses.size();
  idx.theta.assign(n, -1);
  idx.vmag.assign(n, -1);
  for (const Bus& b : net.buses) {
    if (b.kind != BusKind::Slack) idx.theta[b.index] = idx.size++;
  }
  for (const Bus& b : net.buses) {
    if (b.kind == BusKind::PQ) idx.vmag[b.index] = idx.size++;
  }
  return idx;
}

Eigen::VectorXcd to_eigen(std::span<const Phasor> v) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

}  // namespace

Eigen::MatrixXcd dense_ybus(const NetworkModel& net) {
  const auto n = static_cast<Eigen::Index>(net.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const Phasor ys = 1.0 / Phasor(br.series_r, br.series_x);
    const Phasor bc(0.0, br.charging_b / 2.0);
    const Phasor t = std::polar(br.tap, br.shift);
    const auto f = static_cast<Eigen::Index>(br.from);
    const auto to = static_cast<Eigen::Index>(br.to);
    y(f, f) += (ys + bc) / (t * std::conj(t));
    y(f, to) += -ys / std::conj(t);
    y(to, f) += -ys / t;
    y(to, to) += ys + bc;
  }
  for (const Bus& b : net.buses) {
    const auto i = static_cast<Eigen::Index>(b.index);
    y(i, i) += Phasor(b.g_shunt, b.b_shunt);
  }
  return y;
}

std::vector<Phasor> bus_voltages(const NetworkModel& net, std::span<const double> x) {
  const UnknownLayout layout = build_layout(net);
  if (x.size() != layout.size()) throw std::invalid_argument("state length does not match network");
  std::vector<Phasor> v(net.buses.size());
  for (std::size_t b = 0; b < v.size(); ++b) v[b] = Phasor(x[layout.vr_index(b)], x[layout.vi_index(b)]);
  return v;
}

double MismatchReport::max_mismatch() const {
  return std::max({max_p_mismatch, max_q_mismatch, max_v_deviation});
}

MismatchReport power_mismatch(const NetworkModel& net, std::span<const Phasor> voltages) {
  const std::size_t n = net.buses.size();
  if (voltages.size() != n) throw std::invalid_argument("one voltage per bus required");

  const Eigen::VectorXcd v = to_eigen(voltages);
  const Eigen::VectorXcd current = dense_ybus(net) * v;
  const std::vector<Phasor> sched = scheduled_injection(net);
  const std::vector<Phasor> poly = polynomial_draw(net, voltages);

  MismatchReport rep;
  rep.dp.assign(n, 0.0);
  rep.dq.assign(n, 0.0);
  rep.dv.assign(n, 0.0);
  rep.v_mag.assign(n, 0.0);
  for (const Bus& b : net.buses) {
    const auto i = static_cast<Eigen::Index>(b.index);
    rep.v_mag[b.index] = std::abs(voltages[b.index]);
    if (b.kind == BusKind::Slack) continue;
    const Phasor s = v[i] * std::conj(current[i]);
    const Phasor target = sched[b.index] - poly[b.index];
    rep.dp[b.index] = s.real() - target.real();
    rep.max_p_mismatch = std::max(rep.max_p_mismatch, std::abs(rep.dp[b.index]));
    if (b.kind == BusKind::PQ) {
      rep.dq[b.index] = s.imag() - target.imag();
      rep.max_q_mismatch = std::max(rep.max_q_mismatch, std::abs(rep.dq[b.index]));
    } else {
      rep.dv[b.index] = rep.v_mag[b.index] - b.v_set;
      rep.max_v_deviation = std::max(rep.max_v_deviation, std::abs(rep.dv[b.index]));
    }
  }
  // NaN voltages must never look like a match.
  for (double m : rep.v_mag) {
    if (!std::isfinite(m)) rep.max_p_mismatch = std::numeric_limits<double>::infinity();
  }
  return rep;
}

Eigen::MatrixXd polar_jacobian(const NetworkModel& net, std::span<const Phasor> voltages) {
  const PolarIndex idx = polar_index(net);
  const Eigen::MatrixXcd y = dense_ybus(net);
  const Eigen::VectorXcd v = to_eigen(voltages);
  const Eigen::VectorXcd current = y * v;
  const auto n = static_cast<Eigen::Index>(net.buses.size());

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(idx.size, idx.size);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int p_row = idx.theta[static_cast<std::size_t>(i)];
    const int q_row = idx.vmag[static_cast<std::size_t>(i)];
    if (p_row < 0) continue;
    const Phasor s = v[i] * std::conj(current[i]);
    const double vi = std::abs(v[i]);
    const double ti = std::arg(v[i]);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Phasor yik = y(i, k);
      if (yik == Phasor(0.0, 0.0) && i != k) continue;
      const int th_col = idx.theta[static_cast<std::size_t>(k)];
      const int vm_col = idx.vmag[static_cast<std::size_t>(k)];
      const double g = yik.real(), b = yik.imag();
      double dp_dth, dp_dv, dq_dth, dq_dv;
      if (i == k) {
        dp_dth = -s.imag() - b * vi * vi;
        dp_dv = s.real() / vi + g * vi;
        dq_dth = s.real() - g * vi * vi;
        dq_dv = s.imag() / vi - b * vi;
      } else {
        const double vk = std::abs(v[k]);
        const double tik = ti - std::arg(v[k]);
        const double c = std::cos(tik), sn = std::sin(tik);
        dp_dth = vi * vk * (g * sn - b * c);
        dp_dv = vi * (g * c + b * sn);
        dq_dth = -vi * vk * (g * c + b * sn);
        dq_dv = vi * (g * sn - b * c);
      }
      if (th_col >= 0) jac(p_row, th_col) += dp_dth;
      if (vm_col >= 0) jac(p_row, vm_col) += dp_dv;
      if (q_row >= 0 && th_col >= 0) jac(q_row, th_col) += dq_dth;
      if (q_row >= 0 && vm_col >= 0) jac(q_row, vm_col) += dq_dv;
    }
  }
  return jac;
}

PolarSolution polar_nr_reference(const NetworkModel& net, double tol, int max_iter) {
  if (!net.poly_loads.empty()) {
    throw std::invalid_argument("polar reference does not model polynomial loads");
  }
  const PolarIndex idx = polar_index(net);
  const Eigen::MatrixXcd y = dense_ybus(net);
  const std::vector<Phasor> sched = scheduled_injection(net);
  const std::size_t n = net.buses.size();

  std::vector<double> vm(n, 1.0), va(n, 0.0);
  for (const Bus& b : net.buses) {
    if (b.kind != BusKind::PQ) vm[b.index] = b.v_set;
    if (b.kind == BusKind::Slack) va[b.index] = b.theta_set;
  }

  auto phasors = [&]() {
    std::vector<Phasor> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::polar(vm[i], va[i]);
    return v;
  };
  auto mismatch = [&](const std::vector<Phasor>& v) {
    const Eigen::VectorXcd ve = to_eigen(v);
    const Eigen::VectorXcd current = y * ve;
    Eigen::VectorXd f(idx.size);
    for (std::size_t i = 0; i < n; ++i) {
      const Phasor s = v[i] * std::conj(current[static_cast<Eigen::Index>(i)]) - sched[i];
      if (idx.theta[i] >= 0) f[idx.theta[i]] = s.real();
      if (idx.vmag[i] >= 0) f[idx.vmag[i]] = s.imag();
    }
    return f;
  };

  PolarSolution sol;
  std::vector<Phasor> v = phasors();
  Eigen::VectorXd f = mismatch(v);
  for (int it = 0;; ++it) {
    sol.mismatch = f.size() == 0 ? 0.0 : f.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(sol.mismatch)) break;
    if (sol.mismatch < tol) {
      sol.converged = true;
      break;
    }
    if (it >= max_iter) break;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(polar_jacobian(net, v));
    if (!lu.isInvertible()) break;
    const Eigen::VectorXd dx = lu.solve(-f);
    for (std::size_t i = 0; i < n; ++i) {
      if (idx.theta[i] >= 0) va[i] += dx[idx.theta[i]];
      if (idx.vmag[i] >= 0) vm[i] += dx[idx.vmag[i]];
    }
    v = phasors();
    f = mismatch(v);
    sol.iterations = it + 1;
  }
  sol.voltages = std::move(v);
  return sol;
}

std::string_view to_string(SolutionLabel label) {
  switch (label) {
    case SolutionLabel::CorrectPhysical: return "CorrectPhysical";
    case SolutionLabel::WrongSolution: return "WrongSolution";
    case SolutionLabel::Failed: return "Failed";
  }
  return "Unknown";
}

SolutionClass classify_solution(const SolveResult& result, const NetworkModel& net, double tol) {
  SolutionClass out;
  if (result.status != SolveStatus::Converged) {
    out.label = SolutionLabel::Failed;
    out.reason = std::string("solver status ") + std::string(to_string(result.status));
    out.mismatch = std::numeric_limits<double>::infinity();
    return out;
  }
  const std::vector<Phasor> v = bus_voltages(net, result.state.x);
  const MismatchReport rep = power_mismatch(net, v);
  out.mismatch = rep.max_mismatch();

  std::ostringstream why;
  if (!(out.mismatch < tol)) why << "power mismatch " << out.mismatch << " pu exceeds " << tol << "; ";
  for (const Bus& b : net.buses) {
    const double m = rep.v_mag[b.index];
    if (!(m >= kPhysicalVMin && m <= kPhysicalVMax)) {
      why << "bus " << b.external_id << " |V| = " << m << " outside [" << kPhysicalVMin << ", " << kPhysicalVMax
          << "]; ";
    }
  }
  out.reason = why.str();
  if (out.reason.empty()) {
    out.label = SolutionLabel::CorrectPhysical;
    out.reason = "converged inside the physical band";
  } else {
    out.label = SolutionLabel::WrongSolution;
    out.reason.resize(out.reason.size() - 2);
  }
  return out;
}

}  // namespace ivpf
