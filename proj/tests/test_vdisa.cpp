#include <doctest.h>

#include "disa/vdisa.hpp"
#include "oracles.hpp"

using namespace disa;

namespace {

MixingMatrix mixing(const char* topo, std::size_t m) { return metropolis_weights(build_graph(TopologySpec::parse(topo), m)); }

InexactProxStrategy strategy(InexactProxStrategy::Kind k, std::uint64_t seed = 0) {
  InexactProxStrategy s;
  s.kind = k;
  s.seed = seed;
  return s;
}

RunOptions re_options(const Vector& x_star, std::size_t budget = 50000) {
  RunOptions o;
  o.stop.kind = StoppingRule::Kind::relative_error;
  o.stop.tol = 1e-7;
  o.stop.max_iters = budget;
  o.x_star = x_star;
  return o;
}

}  // namespace

TEST_CASE("schedule values") {
  CHECK(EpsilonSchedule::power(1.0, 2.0).at(3) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(EpsilonSchedule::geometric(0.5).at(4) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(EpsilonSchedule::zero().at(10) == 0.0);
  CHECK_THROWS_AS(EpsilonSchedule::power(1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(EpsilonSchedule::power(0.0, 2.0), ConfigError);
  CHECK_THROWS_AS(EpsilonSchedule::geometric(1.0), ConfigError);
  CHECK_THROWS_AS(EpsilonSchedule::geometric(0.0), ConfigError);
  const EpsilonSchedule unsafe = EpsilonSchedule::power(1.0, 1.0, true);
  CHECK_FALSE(unsafe.summable());
  CHECK(unsafe.at(9) == doctest::Approx(0.1));
  CHECK(EpsilonSchedule::power(2.0, 3.0).summable());
  CHECK(EpsilonSchedule::geometric(0.3).summable());
}

TEST_CASE("schedules are positive and nonincreasing") {
  for (const auto& s : {EpsilonSchedule::power(1.0, 2.0), EpsilonSchedule::power(3.0, 1.5),
                        EpsilonSchedule::geometric(std::exp(-1.0)), EpsilonSchedule::geometric(0.9)}) {
    for (std::size_t k = 0; k < 200; ++k) {
      CHECK(s.at(k) > 0.0);
      CHECK(s.at(k + 1) <= s.at(k));
    }
  }
}

TEST_CASE("schedule and strategy text forms") {
  CHECK(EpsilonSchedule::parse("power(1,2)").at(1) == doctest::Approx(0.25));
  CHECK(EpsilonSchedule::parse(" geometric(0.5) ").at(2) == doctest::Approx(0.25));
  CHECK(EpsilonSchedule::parse("zero").kind() == EpsilonSchedule::Kind::zero);
  const EpsilonSchedule s = EpsilonSchedule::power(1.5, 2.5);
  CHECK(EpsilonSchedule::parse(s.to_string()).at(7) == s.at(7));
  CHECK_THROWS_AS(EpsilonSchedule::parse("power(1,1)"), ConfigError);
  CHECK_THROWS_AS(EpsilonSchedule::parse("harmonic"), ConfigError);
  CHECK_THROWS_AS(EpsilonSchedule::parse("power(a,2)"), ConfigError);
  for (const char* name : {"exact", "injected", "adversarial", "iterative"})
    CHECK(InexactProxStrategy::parse(name).to_string() == name);
  CHECK_THROWS_AS(InexactProxStrategy::parse("sloppy"), ConfigError);
}

TEST_CASE("zero tolerance always returns the exact prox") {
  const ProxPtr g = make_l1_prox(0.8);
  std::mt19937_64 rng(80);
  const Vector u = oracle::random_vector(rng, 5, 2.0);
  for (auto k : {InexactProxStrategy::Kind::exact, InexactProxStrategy::Kind::injected,
                 InexactProxStrategy::Kind::adversarial, InexactProxStrategy::Kind::iterative}) {
    const ProxCertificate c = approximate_prox(*g, u, 0.7, 0.0, k, oracle::random_vector(rng, 5));
    CHECK((c.point - g->prox(u, 0.7)).norm() == 0.0);
    CHECK(c.witness.norm() == 0.0);
    CHECK(c.residual_bound == 0.0);
  }
}

TEST_CASE("injected errors are certified exactly by the shifted prox") {
  const ProxPtr g = make_l1_prox(1.0);
  std::mt19937_64 rng(81);
  for (int t = 0; t < 30; ++t) {
    const Vector x2 = oracle::random_vector(rng, 6, 2.0);
    const Vector y2 = oracle::random_vector(rng, 6);
    const double tau = 0.4, eps = 0.05;
    const Vector u = x2 + tau * y2;
    const ProxCertificate c =
        approximate_prox(*g, u, tau, eps, InexactProxStrategy::Kind::injected, Vector::Unit(6, 0));
    CHECK(c.witness.norm() == doctest::Approx(eps).epsilon(1e-14));
    CHECK(check_prox_optimality(*g, u, tau, c.point, c.witness) < 1e-10);
    CHECK(check_prox_optimality(*g, x2, tau, c.point, y2) <= eps + 1e-9);
  }
}

TEST_CASE("iterative inner solver lands within eps times tau of the exact prox") {
  std::mt19937_64 rng(82);
  for (const ProxPtr& g : {make_l1_prox(1.0), make_euclidean_norm_prox(0.5), make_hinge_prox(0.3)}) {
    for (int t = 0; t < 20; ++t) {
      const Vector u = oracle::random_vector(rng, 8, 2.0);
      const double tau = 0.6, eps = 1e-3;
      const ProxCertificate c = approximate_prox(*g, u, tau, eps, InexactProxStrategy::Kind::iterative);
      CHECK(c.witness.norm() <= eps);
      CHECK((c.point - g->prox(u, tau)).norm() <= eps * tau + 1e-15);
      CHECK(check_prox_optimality(*g, u, tau, c.point, Vector::Zero(8)) <= eps + 1e-9);
    }
  }
}

TEST_CASE("iterative inner solver stalls on unreachable accuracy") {
  const ProxPtr g = make_l1_prox(1.0);
  const Vector u = Vector::Constant(1, 50.0);
  CHECK_THROWS_AS(approximate_prox(*g, u, 1.0, 1e-12, InexactProxStrategy::Kind::iterative), InnerSolverStall);
}

TEST_CASE("an inner stall inside the agent-parallel loop reaches the caller") {
  const ProblemInstance inst = make_generalized_lasso(4, 10, 90, 1.0, 3);
  const MixingMatrix w = mixing("cycle", 4);
  const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
  for (Execution exec : {Execution::parallel, Execution::serial_reference}) {
    VdisaEngine engine(inst, w, s, EpsilonSchedule::geometric(1e-3), strategy(InexactProxStrategy::Kind::iterative),
                       exec);
    CHECK_THROWS_AS(
        for (int k = 0; k < 20; ++k) engine.iterate(), InnerSolverStall);
  }
}

TEST_CASE("correction is idle when the duals do not move") {
  const ProblemInstance inst = make_generalized_lasso(3, 4, 83, 1.0, 2);
  const MixingMatrix w = mixing("line", 3);
  const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
  const DualPreconditioner pc(inst, s);
  const KernelContext ctx{&inst, &w, &s, &pc};
  std::mt19937_64 rng(84);
  const AgentBlocks y1 = oracle::random_matrix(rng, 4, 3), y2 = oracle::random_matrix(rng, 2, 3);
  AgentBlocks x1 = oracle::random_matrix(rng, 4, 3), x2 = oracle::random_matrix(rng, 2, 3);
  const AgentBlocks x1_before = x1, x2_before = x2;
  kernels::reference_ops().correction(ctx, y1, y2, y1, y2, x1, x2);
  CHECK((x1 - x1_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK((x2 - x2_before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("each iteration uses one prox, one gradient and one gossip round per agent and certifies its error") {
  const ProblemInstance inst = make_generalized_lasso(4, 10, 85, 3.0, 4);
  const MixingMatrix w = mixing("line", 4);
  const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
  for (auto kind : {InexactProxStrategy::Kind::injected, InexactProxStrategy::Kind::adversarial,
                    InexactProxStrategy::Kind::iterative}) {
    VdisaEngine engine(inst, w, s, EpsilonSchedule::power(1.0, 2.0), strategy(kind, 5));
    for (std::size_t k = 1; k <= 60; ++k) {
      engine.iterate();
      const auto& c = engine.counters();
      CHECK(c.gossip_rounds == k);
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(c.prox_calls[i] == k);
        CHECK(c.gradient_calls[i] == k);
        const auto col = static_cast<Eigen::Index>(i);
        const double r = check_prox_optimality(*inst.agent(i).g, engine.last_step().x2_prev.col(col), s.tau(col),
                                               engine.state().xbar2.col(col), engine.last_step().y2_prev.col(col));
        CHECK(r <= engine.last_epsilon() + 1e-9);
      }
    }
  }
}

TEST_CASE("exact V-DISA and DISA reach the same solution") {
  const ProblemInstance inst = make_generalized_lasso(4, 20, 86, 2.0, 5);
  const MixingMatrix w = mixing("line", 4);
  const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
  const ReferenceSolution ref = reference_solution(inst, w);
  DisaEngine exact(inst, w, s);
  VdisaEngine approx(inst, w, s, EpsilonSchedule::zero(), strategy(InexactProxStrategy::Kind::exact));
  disa_run(exact, re_options(ref.x_star));
  vdisa_run(approx, re_options(ref.x_star));
  CHECK((exact.state().x1 - approx.state().x1).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("V-DISA with a summable schedule solves the n=50 lasso and records its errors") {
  const ProblemInstance inst = make_generalized_lasso(4, 50, 42);
  const MixingMatrix w = mixing("line", 4);
  const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
  const ReferenceSolution ref = reference_solution(inst, w);
  VdisaEngine engine(inst, w, s, EpsilonSchedule::power(1.0, 2.0), strategy(InexactProxStrategy::Kind::injected, 1));
  const Trace t = vdisa_run(engine, re_options(ref.x_star));
  CHECK(t.status == RunStatus::converged);
  for (const auto& row : t.rows) {
    CHECK(row.eps == doctest::Approx(1.0 / std::pow(static_cast<double>(row.iter), 2.0)).epsilon(1e-14));
    CHECK(row.prox_error <= row.eps * (1.0 + 1e-12));
  }
}

TEST_CASE("distance to the saddle point is quasi-Fejer with a moderate constant") {
  for (std::uint64_t seed : {87u, 88u, 89u}) {
    const ProblemInstance inst = make_generalized_lasso(3, 12, seed, 2.0, 3);
    const MixingMatrix w = mixing("line", 3);
    const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
    const ReferenceSolution ref = reference_solution(inst, w);
    VdisaEngine engine(inst, w, s, EpsilonSchedule::power(1.0, 2.0),
                       strategy(InexactProxStrategy::Kind::adversarial));
    const DenseVerifier verifier(inst, w, s, engine.preconditioner(),
                                 to_full_coordinates(ref.state, dense_consensus_factors(w)));
    RunOptions o;
    o.stop.kind = StoppingRule::Kind::max_iters;
    o.stop.max_iters = 400;
    o.verifier = &verifier;
    const Trace t = vdisa_run(engine, o);
    const double psi = quasi_fejer_constant(t);
    CAPTURE(seed);
    CHECK(std::isfinite(psi));
    CHECK(psi >= 0.0);
    CHECK(psi < 1e3);
  }
}

TEST_CASE("unsafe harmonic adversarial errors stall short of the tolerance") {
  const ProblemInstance inst = make_generalized_lasso(4, 50, 42);
  const MixingMatrix w = mixing("line", 4);
  const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
  const ReferenceSolution ref = reference_solution(inst, w);
  VdisaEngine engine(inst, w, s, EpsilonSchedule::power(1.0, 1.0, true),
                     strategy(InexactProxStrategy::Kind::adversarial));
  CHECK_THROWS_AS(vdisa_run(engine, re_options(ref.x_star, 5000)), BudgetExceeded);
}
