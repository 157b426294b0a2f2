#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "ivpf/newton.hpp"
#include "ivpf/oracle.hpp"

using namespace ivpf;

namespace {

Eigen::SparseMatrix<double> sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

}  // namespace

TEST_CASE("options validation") {
  SolverOptions o;
  CHECK_NOTHROW(o.validate());
  o.tol = 0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = {};
  o.max_iter = 0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = {};
  o.alpha_min = 0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = {};
  o.delta_max = -1;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
}

TEST_CASE("linear_solve on trivial systems") {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(4);
  const Eigen::VectorXd dx = linear_solve(sparse(Eigen::MatrixXd::Identity(4, 4)), one);
  CHECK((dx + one).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd f(1);
  f << 4.0;
  CHECK(linear_solve(sparse(Eigen::MatrixXd::Constant(1, 1, 2.0)), f)(0) == -2.0);
}

TEST_CASE("linear_solve reports singular systems") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
  m(1, 1) = 0.0;  // empty row
  CHECK_THROWS_AS(linear_solve(sparse(m), Eigen::VectorXd::Ones(3)), SingularSystem);

  Eigen::MatrixXd r(2, 2);
  r << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(linear_solve(sparse(r), Eigen::VectorXd::Ones(2)), SingularSystem);
}

TEST_CASE("two-bus zero-load network is exact at the flat state") {
  const NetworkModel net = fixtures::case2();
  const UnknownLayout layout = build_layout(net);
  const StateVector x0 = flat_start(net, layout, SolverOptions{});
  const SparseSystem sys = assemble(net, layout, x0.x);
  CHECK(sys.jacobian.rows() == 6);
  CHECK(sys.jacobian.cols() == 6);
  CHECK(sys.residual.cwiseAbs().maxCoeff() == 0.0);

  const SolveResult r = run_newton(net, SolverOptions{}, x0);
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.iterations <= 1);
  CHECK(r.residual_norm == 0.0);
  CHECK(r.state.x[layout.slack_ir_index()] == 0.0);
  CHECK(r.state.x[layout.slack_ii_index()] == 0.0);
}

TEST_CASE("assembled Jacobian matches finite differences on 20 random states") {
  for (const NetworkModel& net : {fixtures::case2(), fixtures::case14()}) {
    const UnknownLayout layout = build_layout(net);
    std::mt19937_64 rng(314);
    for (int t = 0; t < 20; ++t) {
      const std::vector<double> x = fixtures::random_state(rng, layout);
      const Eigen::MatrixXd j = Eigen::MatrixXd(assemble(net, layout, x).jacobian);
      const fixtures::JacobianCheck c = fixtures::compare_jacobian(j, fixtures::fd_jacobian(net, layout, x), 1e-5);
      CHECK(c.failures == 0);
      CHECK(c.nonzeros > 0);
    }
  }
}

TEST_CASE("every scalar and vector assembly agrees bit for bit") {
  const NetworkModel net = fixtures::case14_poly();
  const UnknownLayout layout = build_layout(net);
  std::mt19937_64 rng(8);
  const std::vector<double> x = fixtures::random_state(rng, layout);
  const SparseSystem ref = assemble(net, layout, x, simd::kernels(simd::Isa::Scalar));
  for (simd::Isa isa : {simd::Isa::Avx2, simd::Isa::Neon}) {
    if (!simd::isa_supported(isa)) continue;
    const SparseSystem s = assemble(net, layout, x, simd::kernels(isa));
    CHECK((s.residual.array() == ref.residual.array()).all());
    CHECK(Eigen::MatrixXd(s.jacobian) == Eigen::MatrixXd(ref.jacobian));
  }
}

TEST_CASE("IEEE 14-bus flat start converges with a quadratic tail") {
  const NetworkModel net = fixtures::case14();
  SolverOptions o;
  const SolveResult r = run_newton(net, o, flat_start(net, build_layout(net), o));
  REQUIRE(r.status == SolveStatus::Converged);
  CHECK(r.residual_norm < 1e-6);
  CHECK(r.iterations == static_cast<int>(r.trace.size()));
  const auto& recs = r.trace.records;
  int checked = 0;
  for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
    if (recs[k].residual < 1e-2 && recs[k + 1].alpha == 1.0 && recs[k].residual > 1e-7) {
      CHECK(recs[k + 1].residual <= 10.0 * recs[k].residual * recs[k].residual);
      ++checked;
    }
  }
  CHECK(checked >= 1);
  for (std::size_t k = 0; k < recs.size(); ++k) CHECK(recs[k].k == static_cast<int>(k) + 1);
}

TEST_CASE("a Converged result passes the independent mismatch check") {
  const NetworkModel net = fixtures::case14();
  for (double q : {-10.0, -3.0, 0.0, 4.0, 10.0}) {
    SolverOptions o;
    o.q_init = q;
    const SolveResult r = run_newton(net, o, flat_start(net, build_layout(net), o));
    if (r.status != SolveStatus::Converged) continue;
    const MismatchReport m = power_mismatch(net, bus_voltages(net, r.state.x));
    CHECK(m.max_mismatch() < o.tol);
  }
}

TEST_CASE("hostile start without techniques is recorded, not asserted") {
  const NetworkModel net = fixtures::case14();
  SolverOptions o;
  o.q_init = 10.0;
  o.enable_limiting = false;
  o.enable_stepping = false;
  const SolveResult r = run_newton(net, o, flat_start(net, build_layout(net), o));
  const SolutionClass c = classify_solution(r, net);
  MESSAGE("q_init = 10, no techniques: " << to_string(r.status) << ", " << to_string(c.label) << ", "
                                         << r.iterations << " iterations");
  CHECK(r.iterations == static_cast<int>(r.trace.size()));
}

TEST_CASE("solves are deterministic") {
  const NetworkModel net = fixtures::case14();
  SolverOptions o;
  o.q_init = -7.5;
  const StateVector x0 = flat_start(net, build_layout(net), o);
  const SolveResult a = run_newton(net, o, x0), b = run_newton(net, o, x0);
  CHECK(a.state.x == b.state.x);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("iteration cap yields MaxIterations") {
  const NetworkModel net = fixtures::case14();
  SolverOptions o;
  o.max_iter = 1;
  const SolveResult r = run_newton(net, o, flat_start(net, build_layout(net), o));
  CHECK(r.status == SolveStatus::MaxIterations);
  CHECK(r.iterations == 1);
}

TEST_CASE("state of the wrong length is an argument error") {
  const NetworkModel net = fixtures::case14();
  StateVector bad;
  bad.x.assign(3, 0.0);
  CHECK_THROWS_AS(run_newton(net, SolverOptions{}, bad), std::invalid_argument);
}
