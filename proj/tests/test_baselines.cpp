#include <doctest.h>

#include "disa/baselines.hpp"
#include "oracles.hpp"

using namespace disa;

namespace {

MixingMatrix mixing(const char* topo, std::size_t m) { return metropolis_weights(build_graph(TopologySpec::parse(topo), m)); }

RunOptions re_options(const Vector& x_star, std::size_t budget = 50000) {
  RunOptions o;
  o.stop.kind = StoppingRule::Kind::relative_error;
  o.stop.tol = 1e-7;
  o.stop.max_iters = budget;
  o.x_star = x_star;
  return o;
}

Matrix dense_u(const ProblemInstance& inst) {
  const auto n = static_cast<Eigen::Index>(inst.primal_dim()), p = static_cast<Eigen::Index>(inst.map_dim());
  const auto m = static_cast<Eigen::Index>(inst.agent_count());
  Matrix u = Matrix::Zero(p * m, n * m);
  for (Eigen::Index i = 0; i < m; ++i) u.block(p * i, n * i, p, n) = inst.agent(static_cast<std::size_t>(i)).U;
  return u;
}

}  // namespace

TEST_CASE("operator norms agree with dense eigenvalues") {
  const ProblemInstance inst = make_generalized_lasso(3, 5, 90, 4.0, 3);
  const MixingMatrix w = mixing("line", 3);
  const ReformulatedProblem rp(inst, w);
  const Matrix u = dense_u(inst);
  const Matrix v = oracle::kron_identity(0.5 * (Matrix::Identity(3, 3) - w.dense()), 5);
  const double c_dense = oracle::top_eigenvalue(u.transpose() * u + v);
  CHECK(std::abs(rp.c_norm_sq() - c_dense) <= 1e-8 * c_dense);

  Matrix b = Matrix::Zero(15 + 9, 15 + 9);
  b.topLeftCorner(15, 15) = oracle::psd_sqrt(v);
  b.bottomLeftCorner(9, 15) = u;
  b.bottomRightCorner(9, 9) = -Matrix::Identity(9, 9);
  const double b_dense = oracle::top_eigenvalue(b.transpose() * b);
  CHECK(std::abs(rp.b_norm_sq() - b_dense) <= 1e-8 * b_dense);
}

TEST_CASE("C and its transpose are adjoint") {
  const ProblemInstance inst = make_generalized_lasso(4, 3, 91, 1.0, 2);
  const MixingMatrix w = mixing("cycle", 4);
  const ReformulatedProblem rp(inst, w);
  std::mt19937_64 rng(92);
  const AgentBlocks x = oracle::random_matrix(rng, 3, 4);
  const AgentBlocks z1 = oracle::random_matrix(rng, 2, 4), z2 = oracle::random_matrix(rng, 3, 4);
  const auto [c1, c2] = rp.apply_c(x);
  const double lhs = (c1.array() * z1.array()).sum() + (c2.array() * z2.array()).sum();
  const double rhs = (x.array() * rp.apply_c_transpose(z1, z2).array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("baselines refuse instances beyond the dense limit") {
  std::vector<AgentProblem> agents;
  for (int i = 0; i < 2; ++i)
    agents.push_back({std::make_shared<LeastSquaresLoss>(Matrix::Ones(1, 2600), Vector::Ones(1)), make_zero_prox(),
                      Matrix(0, 2600)});
  const ProblemInstance inst(std::move(agents), {});
  const MixingMatrix w = mixing("line", 2);
  CHECK_THROWS_AS(ReformulatedProblem(inst, w), SizeGuard);
}

TEST_CASE("step policies") {
  const Vector lip = (Vector(3) << 4.0, 5.0, 2.0).finished();
  const BaselineSteps f = baseline_step_sizes(lip, BaselinePolicy::fig4, 3.0);
  CHECK(f.tau == doctest::Approx(0.2 - 1e-4));
  CHECK(f.tau * f.beta == doctest::Approx(0.01));
  const BaselineSteps t = baseline_step_sizes(lip, BaselinePolicy::table3, 3.0, 0.02);
  CHECK(t.tau == doctest::Approx((1.0 - 1e-4) / (2.5 + 0.06)));
  CHECK(t.beta == 0.02);
  CHECK(baseline_condition_holds(t, 3.0, 5.0));
  const BaselineSteps l = baseline_step_sizes(lip, BaselinePolicy::logistic, 3.0);
  CHECK(l.tau == 0.25);
  CHECK(l.beta == 0.01);
  CHECK_FALSE(baseline_condition_holds({1.0, 1.0}, 3.0, 5.0));
  CHECK(parse_baseline_policy("table3") == BaselinePolicy::table3);
  CHECK_THROWS_AS(parse_baseline_policy("fastest"), ConfigError);
}

TEST_CASE("divergence indicator latches") {
  DivergenceIndicator d(2.0);
  CHECK_FALSE(d.update(3.0));
  CHECK_FALSE(d.update(1.9e6));
  CHECK(d.update(2.1e6));
  CHECK(d.update(0.0));
  CHECK(d.fired());
  DivergenceIndicator nan(1.0);
  CHECK(nan.update(std::nan("")));
  CHECK(nan.fired());
}

TEST_CASE("saddle points are fixed points of Condat-Vu and L-ALM") {
  const ProblemInstance inst = make_generalized_lasso(3, 6, 93, 3.0, 2);
  const MixingMatrix w = mixing("line", 3);
  const ReferenceSolution ref = reference_solution(inst, w);
  const PrimalDualPoint star = to_full_coordinates(ref.state, dense_consensus_factors(w));
  const ReformulatedProblem rp(inst, w);

  CondatVu cv(rp, baseline_step_sizes(inst.lipschitz_constants(), BaselinePolicy::fig4, rp.c_norm_sq()));
  cv.set_state(star.x1, star.y2, star.y1);
  cv.iterate();
  CHECK((cv.x1() - star.x1).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((cv.z1() - star.y2).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((cv.z2() - star.y1).cwiseAbs().maxCoeff() < 1e-9);

  LinearizedAlm alm(rp, baseline_step_sizes(inst.lipschitz_constants(), BaselinePolicy::fig4, rp.b_norm_sq()));
  alm.set_state(star);
  alm.iterate();
  CHECK((alm.point() - star).squared_norm() < 1e-18);
}

TEST_CASE("baselines converge with valid steps and trail DISA") {
  const ProblemInstance inst = make_generalized_lasso(4, 50, 42);
  const MixingMatrix w = mixing("line", 4);
  const ReferenceSolution ref = reference_solution(inst, w);
  const ReformulatedProblem rp(inst, w);
  const Vector lip = inst.lipschitz_constants();
  const BaselineSteps cvs = baseline_step_sizes(lip, BaselinePolicy::fig4, rp.c_norm_sq());
  const BaselineSteps als = baseline_step_sizes(lip, BaselinePolicy::fig4, rp.b_norm_sq());
  CHECK(baseline_condition_holds(cvs, rp.c_norm_sq(), rp.smooth_lipschitz()));
  const Trace cv = condat_vu_run(rp, cvs, re_options(ref.x_star));
  const Trace alm = lalm_run(rp, als, re_options(ref.x_star));
  DisaEngine engine(inst, w, default_step_sizes(lip, StepPolicy::lasso_default));
  const Trace disa = disa_run(engine, re_options(ref.x_star));
  CHECK(cv.status == RunStatus::converged);
  CHECK(alm.status == RunStatus::converged);
  CHECK(alm.iterations() >= disa.iterations());
  CHECK(cv.iterations() >= disa.iterations());
  CHECK(std::isnan(cv.rows.back().kkt_norm));
}

TEST_CASE("violated step condition fires the divergence indicator") {
  const ProblemInstance inst = make_generalized_lasso(4, 50, 42, 100.0, 5);
  const MixingMatrix w = mixing("line", 4);
  const ReferenceSolution ref = reference_solution(inst, w);
  const ReformulatedProblem rp(inst, w);
  const BaselineSteps s = baseline_step_sizes(inst.lipschitz_constants(), BaselinePolicy::fig4, rp.b_norm_sq());
  CHECK(s.tau * s.beta * rp.b_norm_sq() > 10.0);
  const Trace t = lalm_run(rp, s, re_options(ref.x_star));
  CHECK(t.status == RunStatus::diverged);
}

TEST_CASE("Condat-Vu in a violated regime is not Fejer monotone") {
  const ProblemInstance inst = make_generalized_lasso(3, 10, 94, 100.0, 3);
  const MixingMatrix w = mixing("line", 3);
  const ReferenceSolution ref = reference_solution(inst, w);
  const ReformulatedProblem rp(inst, w);
  const BaselineSteps s = baseline_step_sizes(inst.lipschitz_constants(), BaselinePolicy::fig4, rp.c_norm_sq());
  CondatVu cv(rp, s);
  cv.set_state(AgentBlocks::Zero(10, 3), AgentBlocks::Zero(3, 3), AgentBlocks::Zero(10, 3));
  const AgentBlocks star = ref.x_star.replicate(1, 3);
  Trace t;
  for (std::size_t k = 1; k <= 300; ++k) {
    cv.iterate();
    TraceRow row;
    row.iter = k;
    row.h_dist = (cv.x1() - star).squaredNorm();
    t.rows.push_back(row);
  }
  CHECK_FALSE(fejer_check(t).pass);
}

TEST_CASE("NIDS solves a quadratic consensus problem") {
  std::mt19937_64 rng(95);
  std::vector<AgentProblem> agents;
  Matrix gram = Matrix::Zero(4, 4);
  Vector rhs = Vector::Zero(4);
  for (int i = 0; i < 3; ++i) {
    const Matrix q = oracle::random_matrix(rng, 8, 4);
    const Vector t = oracle::random_vector(rng, 8);
    gram += q.transpose() * q;
    rhs += q.transpose() * t;
    agents.push_back({std::make_shared<LeastSquaresLoss>(q, t), make_zero_prox(), Matrix(0, 4)});
  }
  const ProblemInstance inst(std::move(agents), {});
  const MixingMatrix w = mixing("cycle", 3);
  const Vector centralized = gram.ldlt().solve(rhs);
  const Trace t = nids_reference_run(inst, w, 1.0 / inst.lipschitz_constants().maxCoeff(), re_options(centralized));
  CHECK(t.status == RunStatus::converged);
}

TEST_CASE("tiny NIDS steps barely move and nonzero regularisers are rejected") {
  const ProblemInstance smooth = [] {
    std::mt19937_64 rng(96);
    std::vector<AgentProblem> agents;
    for (int i = 0; i < 3; ++i)
      agents.push_back({std::make_shared<LeastSquaresLoss>(oracle::random_matrix(rng, 5, 3), oracle::random_vector(rng, 5)),
                        make_zero_prox(), Matrix(0, 3)});
    return ProblemInstance(std::move(agents), {});
  }();
  const MixingMatrix w = mixing("cycle", 3);
  NidsRecursion nids(smooth, w, 1e-12);
  const AgentBlocks x0 = Vector::Ones(3).replicate(1, 3);
  nids.set_state(x0);
  nids.iterate();
  CHECK((nids.x() - x0).cwiseAbs().maxCoeff() < 1e-9);
  const ProblemInstance lasso = make_generalized_lasso(3, 3, 97, 1.0, 2);
  CHECK_THROWS(NidsRecursion(lasso, w, 0.1));
}

TEST_CASE("baseline runs reject the KKT rule and honour zero budgets") {
  const ProblemInstance inst = make_generalized_lasso(2, 4, 98, 1.0, 2);
  const MixingMatrix w = mixing("line", 2);
  const ReformulatedProblem rp(inst, w);
  RunOptions o;
  o.stop.kind = StoppingRule::Kind::kkt;
  CHECK_THROWS_AS(condat_vu_run(rp, {0.01, 0.01}, o), ConfigError);
  o.stop.kind = StoppingRule::Kind::max_iters;
  o.stop.max_iters = 0;
  CHECK(lalm_run(rp, {0.01, 0.01}, o).empty());
  o.stop.max_iters = 10;
  const Trace t = condat_vu_run(rp, {0.01, 0.01}, o);
  CHECK(t.rows.size() == 10);
  CHECK(t.status == RunStatus::completed);
  CHECK(std::isnan(t.rows.back().re_err));
}
