#include "ivpf/newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

#include "ivpf/robustness.hpp"

namespace ivpf {

namespace {

using Triplet = Eigen::Triplet<double>;

constexpr double kPivotRelTol = 1e-12;
constexpr double kSolveResidualTol = 1e-9;

void append(std::vector<Triplet>& trips, Eigen::VectorXd* constant, const DeviceStamp& s) {
  for (const JacobianEntry& e : s.jacobian_entries) {
    trips.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
  }
  if (constant != nullptr) {
    for (const ResidualEntry& r : s.residual_entries) (*constant)[static_cast<Eigen::Index>(r.row)] += r.value;
  }
}

// Holds the state-independent part of the system so Newton iterations only
// re-evaluate the nonlinear devices.
class Assembler {
 public:
  Assembler(const NetworkModel& net, const UnknownLayout& layout, const simd::KernelTable& kernels)
      : net_(net), layout_(layout), kernels_(kernels), constant_(Eigen::VectorXd::Zero(n())) {
    for (const Branch& br : net.branches) {
      if (br.in_service) append(linear_, &constant_, stamp_branch(br, layout));
    }
    for (const Bus& bus : net.buses) {
      append(linear_, &constant_, stamp_shunt(bus, layout));
      if (bus.kind == BusKind::Slack) append(linear_, &constant_, stamp_slack(bus, layout));
    }
    for (const Bus& bus : net.buses) {
      if (has_pq_device(net, bus.index)) pq_buses_.push_back(bus.index);
    }
    const std::size_t m = pq_buses_.size() + net.pv_gens.size();
    for (auto* v : {&p_, &q_, &vr_, &vi_, &ir_, &ii_, &drr_, &dri_, &dir_, &dii_, &drq_, &diq_}) v->resize(m);

    const std::size_t np = net.poly_loads.size();
    for (std::size_t c = 0; c < 6; ++c) {
      gr_[c].resize(np);
      gi_[c].resize(np);
    }
    for (std::size_t k = 0; k < np; ++k) {
      const PolyLoadCoeffs coeffs = net.scheduled_poly(k);
      for (std::size_t c = 0; c < 6; ++c) {
        gr_[c][k] = coeffs.g_real[c];
        gi_[c][k] = coeffs.g_imag[c];
      }
    }
    for (auto* v : {&pvr_, &pvi_, &pir_, &pii_, &prr_, &pri_, &pdir_, &pdii_}) v->resize(np);
  }

  Eigen::Index n() const { return static_cast<Eigen::Index>(layout_.size()); }

  SparseSystem linear_system() const {
    SparseSystem sys;
    sys.jacobian.resize(n(), n());
    sys.jacobian.setFromTriplets(linear_.begin(), linear_.end());
    sys.residual = constant_;
    return sys;
  }

  SparseSystem evaluate(std::span<const double> x) {
    Eigen::VectorXd f = constant_;
    for (const Triplet& t : linear_) f[t.row()] += t.value() * x[static_cast<std::size_t>(t.col())];

    std::vector<Triplet> trips = linear_;
    add_constant_power(x, trips, f);
    add_polynomial(x, trips, f);

    SparseSystem sys;
    sys.jacobian.resize(n(), n());
    sys.jacobian.setFromTriplets(trips.begin(), trips.end());
    sys.residual = std::move(f);
    return sys;
  }

 private:
  void add_constant_power(std::span<const double> x, std::vector<Triplet>& trips, Eigen::VectorXd& f) {
    const std::size_t npq = pq_buses_.size();
    for (std::size_t k = 0; k < npq; ++k) {
      const std::size_t bus = pq_buses_[k];
      p_[k] = net_.scheduled_p_load(bus);
      q_[k] = net_.scheduled_q_load(bus);
      vr_[k] = x[layout_.vr_index(bus)];
      vi_[k] = x[layout_.vi_index(bus)];
    }
    for (std::size_t g = 0; g < net_.pv_gens.size(); ++g) {
      const PvGen& gen = net_.pv_gens[g];
      const std::size_t k = npq + g;
      p_[k] = pv_net_p(net_, g);
      q_[k] = pv_net_q(net_, g, x[layout_.q_index(g)]);
      vr_[k] = x[layout_.vr_index(gen.bus)];
      vi_[k] = x[layout_.vi_index(gen.bus)];
    }

    const simd::ConstantPowerBatch batch{p_, q_, vr_, vi_, ir_, ii_, drr_, dri_, dir_, dii_, drq_, diq_};
    const std::size_t collapsed = kernels_.constant_power(batch, kVoltageGuard);
    if (collapsed != simd::kNoCollapse) {
      throw VoltageCollapse(vr_[collapsed] * vr_[collapsed] + vi_[collapsed] * vi_[collapsed]);
    }

    auto stamp = [&](std::size_t k, std::size_t bus, double sign) {
      const int r = static_cast<int>(layout_.vr_index(bus));
      const int i = static_cast<int>(layout_.vi_index(bus));
      trips.emplace_back(r, r, sign * drr_[k]);
      trips.emplace_back(r, i, sign * dri_[k]);
      trips.emplace_back(i, r, sign * dir_[k]);
      trips.emplace_back(i, i, sign * dii_[k]);
      f[r] += sign * ir_[k];
      f[i] += sign * ii_[k];
    };
    for (std::size_t k = 0; k < npq; ++k) stamp(k, pq_buses_[k], -1.0);
    for (std::size_t g = 0; g < net_.pv_gens.size(); ++g) {
      const std::size_t k = npq + g;
      const std::size_t bus = net_.pv_gens[g].bus;
      stamp(k, bus, 1.0);
      const int r = static_cast<int>(layout_.vr_index(bus));
      const int i = static_cast<int>(layout_.vi_index(bus));
      const int q = static_cast<int>(layout_.q_index(g));
      trips.emplace_back(r, q, drq_[k]);
      trips.emplace_back(i, q, diq_[k]);
      // Vr^2 + Vi^2 - Vset^2
      const double vset = net_.pv_gens[g].v_set;
      trips.emplace_back(q, r, 2.0 * vr_[k]);
      trips.emplace_back(q, i, 2.0 * vi_[k]);
      f[q] += (vr_[k] * vr_[k] + vi_[k] * vi_[k]) - vset * vset;
    }
  }

  void add_polynomial(std::span<const double> x, std::vector<Triplet>& trips, Eigen::VectorXd& f) {
    const std::size_t np = net_.poly_loads.size();
    if (np == 0) return;
    for (std::size_t k = 0; k < np; ++k) {
      pvr_[k] = x[layout_.vr_index(net_.poly_loads[k].bus)];
      pvi_[k] = x[layout_.vi_index(net_.poly_loads[k].bus)];
    }
    simd::PolynomialBatch batch;
    for (std::size_t c = 0; c < 6; ++c) {
      batch.g_real[c] = gr_[c];
      batch.g_imag[c] = gi_[c];
    }
    batch.vr = pvr_;
    batch.vi = pvi_;
    batch.i_r = pir_;
    batch.i_i = pii_;
    batch.dir_dvr = prr_;
    batch.dir_dvi = pri_;
    batch.dii_dvr = pdir_;
    batch.dii_dvi = pdii_;
    kernels_.polynomial(batch);

    for (std::size_t k = 0; k < np; ++k) {
      const int r = static_cast<int>(layout_.vr_index(net_.poly_loads[k].bus));
      const int i = static_cast<int>(layout_.vi_index(net_.poly_loads[k].bus));
      trips.emplace_back(r, r, -prr_[k]);
      trips.emplace_back(r, i, -pri_[k]);
      trips.emplace_back(i, r, -pdir_[k]);
      trips.emplace_back(i, i, -pdii_[k]);
      f[r] -= pir_[k];
      f[i] -= pii_[k];
    }
  }

  const NetworkModel& net_;
  const UnknownLayout& layout_;
  const simd::KernelTable& kernels_;
  std::vector<Triplet> linear_;
  Eigen::VectorXd constant_;
  std::vector<std::size_t> pq_buses_;
  std::vector<double> p_, q_, vr_, vi_, ir_, ii_, drr_, dri_, dir_, dii_, drq_, diq_;
  std::array<std::vector<double>, 6> gr_, gi_;
  std::vector<double> pvr_, pvi_, pir_, pii_, prr_, pri_, pdir_, pdii_;
};

double max_voltage(std::span<const double> x, const UnknownLayout& layout, double* max_component) {
  double vmax = 0.0, cmax = 0.0;
  for (std::size_t b = 0; b < layout.bus_count(); ++b) {
    const double vr = x[layout.vr_index(b)];
    const double vi = x[layout.vi_index(b)];
    vmax = std::max(vmax, std::hypot(vr, vi));
    cmax = std::max({cmax, std::abs(vr), std::abs(vi)});
  }
  if (max_component != nullptr) *max_component = cmax;
  return vmax;
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void SolverOptions::validate() const {
  if (!(tol > 0)) throw std::invalid_argument("tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(alpha_min > 0 && alpha_min <= 1)) throw std::invalid_argument("alpha_min must lie in (0, 1]");
  if (!(delta_max > 0)) throw std::invalid_argument("delta_max must be positive");
  if (!(voltage_box > 0)) throw std::invalid_argument("voltage_box must be positive");
  if (!std::isfinite(q_init)) throw std::invalid_argument("q_init must be finite");
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::Diverged: return "Diverged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::SingularSystem: return "SingularSystem";
  }
  return "Unknown";
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) {
    if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(e));
  }
  return m;
}

StateVector flat_start(const NetworkModel& net, const UnknownLayout& layout, const SolverOptions& options) {
  if (!options.q_init_per_gen.empty() && options.q_init_per_gen.size() != net.pv_gens.size()) {
    throw std::invalid_argument("q_init_per_gen must have one entry per PV generator");
  }
  StateVector s;
  s.x.assign(layout.size(), 0.0);
  for (const Bus& bus : net.buses) {
    double vr = 1.0, vi = 0.0;
    if (bus.kind == BusKind::Slack) {
      vr = bus.v_set * std::cos(bus.theta_set);
      vi = bus.v_set * std::sin(bus.theta_set);
    } else if (bus.kind == BusKind::PV) {
      vr = bus.v_set;
    }
    s.x[layout.vr_index(bus.index)] = vr;
    s.x[layout.vi_index(bus.index)] = vi;
  }
  for (std::size_t g = 0; g < net.pv_gens.size(); ++g) {
    s.x[layout.q_index(g)] = options.q_init_per_gen.empty() ? options.q_init : options.q_init_per_gen[g];
  }
  return s;
}

SparseSystem assemble(const NetworkModel& net, const UnknownLayout& layout, std::span<const double> x,
                      const simd::KernelTable& kernels) {
  if (x.size() != layout.size()) throw std::invalid_argument("state length does not match layout");
  Assembler a(net, layout, kernels);
  return a.evaluate(x);
}

SparseSystem assemble_linear(const NetworkModel& net, const UnknownLayout& layout) {
  return Assembler(net, layout, simd::kernels(simd::Isa::Scalar)).linear_system();
}

Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& jacobian, const Eigen::VectorXd& residual) {
  if (jacobian.rows() != jacobian.cols() || jacobian.rows() != residual.size()) {
    throw std::invalid_argument("linear_solve needs a square system matching the residual");
  }
  if (jacobian.rows() == 0) return Eigen::VectorXd();

  Eigen::SparseMatrix<double> a = jacobian;
  a.makeCompressed();
  double scale = 0.0;
  for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  if (!(scale > 0) || !std::isfinite(scale)) throw SingularSystem("SingularSystem: zero or non-finite matrix");

  using Solver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
  Solver lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw SingularSystem("SingularSystem: " + lu.lastErrorMessage());

  // U's diagonal lives in the supernodal L store.
  const auto& lstore = lu.matrixL().m_mapL;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Solver::SCMatrix::InnerIterator it(lstore, j); it; ++it) {
      if (it.index() == j) {
        if (!(std::abs(it.value()) >= kPivotRelTol * scale)) {
          throw SingularSystem("SingularSystem: pivot " + std::to_string(it.value()) + " in column " +
                               std::to_string(j));
        }
        break;
      }
    }
  }

  Eigen::VectorXd dx = lu.solve(-residual);
  if (lu.info() != Eigen::Success || !dx.allFinite()) throw SingularSystem("SingularSystem: solve failed");
  const double fnorm = residual.lpNorm<Eigen::Infinity>();
  const double err = (a * dx + residual).lpNorm<Eigen::Infinity>();
  if (!(err < kSolveResidualTol * std::max(1.0, fnorm))) {
    throw SingularSystem("SingularSystem: linear residual " + std::to_string(err));
  }
  return dx;
}

namespace {

// Largest |V_b| * |f_b| over the KCL row pairs: the complex power mismatch
// implied by the current residual at bus b.
double power_residual(std::span<const double> x, const UnknownLayout& layout, const Eigen::VectorXd& f) {
  double worst = 0.0;
  for (std::size_t b = 0; b < layout.bus_count(); ++b) {
    const auto r = layout.vr_index(b), i = layout.vi_index(b);
    worst = std::max(worst, std::hypot(x[r], x[i]) * std::hypot(f[static_cast<Eigen::Index>(r)],
                                                               f[static_cast<Eigen::Index>(i)]));
  }
  return worst;
}

}  // namespace

SolveResult run_newton(const NetworkModel& net, const SolverOptions& options, const StateVector& initial,
                       double beta) {
  options.validate();
  const UnknownLayout layout = build_layout(net);
  if (initial.x.size() != layout.size()) throw std::invalid_argument("initial state does not match layout");

  Assembler assembler(net, layout, simd::active_kernels());
  SolveResult result;
  result.beta = beta;
  std::vector<double> x = initial.x;
  const double divergence_cutoff = 10.0 * options.voltage_box;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  SparseSystem sys;
  double res = kInf;
  try {
    sys = assembler.evaluate(x);
    res = max_abs({sys.residual.data(), static_cast<std::size_t>(sys.residual.size())});
  } catch (const VoltageCollapse&) {
    result.status = SolveStatus::Diverged;
  }

  if (std::isfinite(res)) {
    for (int k = 1;; ++k) {
      if (res < options.tol && power_residual(x, layout, sys.residual) < options.tol) {
        result.status = SolveStatus::Converged;
        break;
      }
      if (k > options.max_iter) {
        result.status = SolveStatus::MaxIterations;
        break;
      }

      Eigen::VectorXd dx;
      try {
        dx = linear_solve(sys.jacobian, sys.residual);
      } catch (const SingularSystem&) {
        result.status = SolveStatus::SingularSystem;
        break;
      }

      IterationRecord rec;
      rec.k = k;
      rec.beta = beta;
      std::vector<double> step(dx.data(), dx.data() + dx.size());
      if (options.enable_limiting) {
        LimitedStep limited = limit_step(step, x, layout, net, options);
        step = std::move(limited.step);
        rec.alpha = limited.min_alpha;
      }
      const std::vector<double> before = x;
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += step[i];
      if (options.enable_limiting) clip_to_box(x, before, layout, options.voltage_box);

      rec.max_v = max_voltage(x, layout, &rec.max_component);
      if (!all_finite(x) || rec.max_component > divergence_cutoff) {
        rec.residual = kInf;
        result.trace.records.push_back(rec);
        result.status = SolveStatus::Diverged;
        res = kInf;
        break;
      }
      try {
        sys = assembler.evaluate(x);
        res = max_abs({sys.residual.data(), static_cast<std::size_t>(sys.residual.size())});
      } catch (const VoltageCollapse&) {
        res = kInf;
      }
      rec.residual = res;
      result.trace.records.push_back(rec);
      if (!std::isfinite(res)) {
        result.status = SolveStatus::Diverged;
        break;
      }
    }
  }

  result.iterations = static_cast<int>(result.trace.size());
  result.residual_norm = res;
  result.state.x = std::move(x);
  result.state.k = result.iterations;
  return result;
}

}  // namespace ivpf
