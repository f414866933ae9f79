// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include "dense_disa.hpp"
#include "disa/experiment.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace disa;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "FAILED " << what << "; ";
    }
  }
};

MixingMatrix mixing(const char* topo, std::size_t m) { return metropolis_weights(build_graph(TopologySpec::parse(topo), m)); }

const std::vector<double> kScales{1.0, 10.0, 100.0, 1000.0, 10000.0};

ExperimentConfig lasso_config() {
  ExperimentConfig c;
  c.problem.agents = 4;
  c.problem.dim = 50;
  c.problem.u_rows = 5;
  c.problem.seed = 42;
  c.topology = TopologySpec::parse("line");
  c.stop.kind = StoppingRule::Kind::relative_error;
  c.stop.tol = 1e-7;
  c.stop.max_iters = 50000;
  return c;
}

Outcome step_size_robustness() {
  Outcome o;
  const auto rows = sweep_u_scale(lasso_config(), kScales, {"disa"});
  std::size_t lo = SIZE_MAX, hi = 0;
  o.detail << "iterations:";
  for (const auto& row : rows) {
    const SweepCell& cell = row.cells.at(0);
    o.detail << ' ' << cell.outcome;
    o.require(cell.status == RunStatus::converged, "convergence at scale " + std::to_string(row.scale));
    lo = std::min(lo, cell.iterations);
    hi = std::max(hi, cell.iterations);
  }
  const double span = rows.back().max_map_norm_sq / rows.front().max_map_norm_sq;
  o.detail << "; max/min " << static_cast<double>(hi) / static_cast<double>(lo) << "; map norm span " << span << "; ";
  o.require(hi <= 5 * lo, "max/min <= 5");
  return o;
}

Outcome baseline_contrast() {
  Outcome o;
  ExperimentConfig cfg = lasso_config();
  cfg.solver.baseline_policy = "fig4";
  const auto rows = sweep_u_scale(cfg, kScales, {"condat_vu", "lalm"});
  for (const auto& row : rows) {
    const ProblemInstance inst = make_generalized_lasso(4, 50, 42, row.scale, 5);
    const MixingMatrix w = mixing("line", 4);
    const ReformulatedProblem rp(inst, w);
    const double c_norm = rp.c_norm_sq();
    const BaselineSteps s = baseline_step_sizes(inst.lipschitz_constants(), BaselinePolicy::fig4, c_norm);
    const double product = s.tau * s.beta * c_norm;
    o.detail << "scale " << row.scale << ": cv " << row.cells[0].outcome << ", lalm " << row.cells[1].outcome
             << ", tau*beta*norm " << product << "; ";
    for (const SweepCell& cell : row.cells) {
      const std::string where = cell.solver + " at scale " + std::to_string(row.scale);
      if (row.scale == 1.0) {
        o.require(cell.status == RunStatus::converged, "convergence of " + where);
      } else if (row.scale >= 100.0) {
        o.require(cell.outcome == ">budget" || cell.outcome == "diverged", "failure of " + where);
        o.require(product > 1.0, "violated condition at " + where);
      }
    }
  }
  return o;
}

Outcome equivalence_suites() {
  Outcome o;
  double worst_compact = 0.0, worst_nids = 0.0;
  for (double scale : {1.0, 30.0}) {
    const ProblemInstance inst = make_generalized_lasso(4, 30, 500, scale, 3);
    const MixingMatrix w = mixing("cycle", 4);
    const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
    DisaEngine engine(inst, w, s);
    oracle::DenseDisa dense(inst, w, s.tau, s.beta);
    for (int k = 0; k < 50; ++k) {
      engine.iterate();
      dense.step();
      worst_compact = std::max({worst_compact, (engine.state().x1 - dense.x1()).cwiseAbs().maxCoeff(),
                                (engine.state().x2 - dense.x2()).cwiseAbs().maxCoeff()});
    }
  }
  {
    const ProblemInstance full = make_generalized_lasso(4, 30, 501);
    std::vector<AgentProblem> agents;
    for (const auto& a : full.agents()) agents.push_back({a.f, make_zero_prox(), Matrix(0, 30)});
    const ProblemInstance inst(std::move(agents), {"smooth", 0, 1.0});
    const MixingMatrix w = mixing("cycle", 4);
    const double tau = 1.0 / inst.lipschitz_constants().maxCoeff();
    DisaEngine engine(inst, w, StepSizes::unvalidated(Vector::Constant(4, tau), 1.0 / tau, inst.lipschitz_constants()));
    NidsRecursion nids(inst, w, tau);
    nids.set_state(AgentBlocks::Zero(30, 4));
    for (int k = 0; k < 50; ++k) {
      engine.iterate();
      nids.iterate();
      worst_nids = std::max(worst_nids, (engine.state().x1 - nids.x()).cwiseAbs().maxCoeff());
    }
  }
  o.detail << "compact form max deviation " << worst_compact << ", NIDS max deviation " << worst_nids << "; ";
  o.require(worst_compact <= 1e-11, "compact form equivalence");
  o.require(worst_nids <= 1e-11, "NIDS equivalence");
  return o;
}

// The n=30, m=3 instance shared by the inequality and rate criteria.
struct SmallInstance {
  ProblemInstance inst = make_generalized_lasso(3, 30, 42, 1.0, 5);
  MixingMatrix w = mixing("line", 3);
  ReferenceSolution ref = reference_solution(inst, w);
  DenseConsensusFactors factors = dense_consensus_factors(w);
  PrimalDualPoint star = to_full_coordinates(ref.state, factors);
};

Outcome theorem_inequalities(const SmallInstance& si) {
  Outcome o;
  {
    const StepSizes s = default_step_sizes(si.inst.lipschitz_constants(), StepPolicy::lasso_default);
    DisaEngine engine(si.inst, si.w, s);
    const DenseVerifier verifier(si.inst, si.w, s, engine.preconditioner(), si.star);
    RunOptions opts;
    opts.stop.kind = StoppingRule::Kind::max_iters;
    opts.stop.max_iters = 2000;
    opts.verifier = &verifier;
    const Trace t = disa_run(engine, opts);
    const FejerReport f = fejer_check(t);
    const PartialSumReport ps = partial_sum_check(t, t.meta.h_dist_initial);
    o.detail << "max H-distance increment " << f.max_increment << ", partial-sum slack " << ps.slack << "; ";
    o.require(f.pass, "Fejer monotonicity");
    o.require(ps.pass, "partial-sum bound");
  }
  const Vector lip = si.inst.lipschitz_constants();
  const Vector tau = 0.9 * lip.cwiseInverse();
  const StepSizes strict = validate_step_sizes(lip, tau, 0.5 / tau.maxCoeff());
  DisaEngine engine(si.inst, si.w, strict);
  const MetricOperators ops(si.inst, strict, engine.preconditioner(), si.factors);
  const PrimalDualPoint w0 = to_full_coordinates(engine.state(), si.factors);
  PrimalDualPoint sum{AgentBlocks::Zero(30, 3), AgentBlocks::Zero(5, 3), AgentBlocks::Zero(30, 3),
                      AgentBlocks::Zero(5, 3)};
  std::size_t checks = 0, failures = 0;
  double worst_ratio = -1e300;
  for (std::size_t k = 1; k <= 1000; ++k) {
    engine.iterate();
    const PrimalDualPoint now = to_full_coordinates(engine.state(), si.factors);
    sum.x1 += engine.state().xbar1;
    sum.x2 += engine.state().xbar2;
    sum.y1 += now.y1;
    sum.y2 += now.y2;
    if (k % 25 != 0) continue;
    const double inv = 1.0 / static_cast<double>(k);
    const PrimalDualPoint avg{sum.x1 * inv, sum.x2 * inv, sum.y1 * inv, sum.y2 * inv};
    for (double scale : {0.0, 0.5, 1.0, 2.0}) {
      const PrimalDualPoint probe{si.star.x1, si.star.x2, scale * si.star.y1, scale * si.star.y2};
      const GapReport g = primal_dual_gap_bound_check(si.inst, strict, ops, avg, probe, w0, k);
      ++checks;
      failures += g.pass ? 0 : 1;
      worst_ratio = std::max(worst_ratio, g.gap / g.bound);
    }
  }
  o.detail << "gap bound " << checks - failures << "/" << checks << " probes, worst gap/bound " << worst_ratio << "; ";
  o.require(failures == 0, "gap bound");
  return o;
}

Outcome rate_shape(const SmallInstance& si) {
  Outcome o;
  const StepSizes s = default_step_sizes(si.inst.lipschitz_constants(), StepPolicy::lasso_default);
  {
    DisaEngine engine(si.inst, si.w, s);
    RunOptions opts;
    opts.stop.kind = StoppingRule::Kind::max_iters;
    opts.stop.max_iters = 2000;
    const Trace t = disa_run(engine, opts);
    std::vector<double> ks, scaled;
    double sum = 0.0;
    for (const TraceRow& r : t.rows) {
      sum += r.kkt_norm * r.kkt_norm;
      if (r.iter >= 100) {
        ks.push_back(static_cast<double>(r.iter));
        scaled.push_back(sum);
      }
    }
    const double slope = log_log_slope(ks, scaled);
    o.detail << "log-log slope of K*avg|kkt|^2 " << slope << "; ";
    o.require(std::isfinite(slope) && slope < 0.1, "bounded K*average KKT");
  }
  DisaEngine engine(si.inst, si.w, s);
  RunOptions opts;
  opts.stop.kind = StoppingRule::Kind::relative_error;
  opts.stop.tol = 1e-10;
  opts.stop.max_iters = 50000;
  opts.x_star = si.ref.x_star;
  const Trace t = disa_run(engine, opts);
  const LinearFit fit = tail_linear_fit(t.column(&TraceRow::re_err));
  o.detail << "ReE tail fit over " << t.rows.size() << " iterations: rate " << fit.rate << ", R^2 " << fit.r_squared
           << "; ";
  o.require(fit.r_squared > 0.98, "linear tail R^2 > 0.98");
  return o;
}

Outcome inexact_variant() {
  Outcome o;
  const ProblemInstance inst = make_generalized_lasso(4, 50, 42, 1.0, 5);
  const MixingMatrix w = mixing("line", 4);
  const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);
  const ReferenceSolution ref = reference_solution(inst, w);
  RunOptions opts;
  opts.stop.kind = StoppingRule::Kind::relative_error;
  opts.stop.tol = 1e-7;
  opts.stop.max_iters = 50000;
  opts.x_star = ref.x_star;
  DisaEngine exact(inst, w, s);
  const double exact_iters = static_cast<double>(disa_run(exact, opts).rows.size());
  o.detail << "exact " << exact_iters;

  InexactProxStrategy strategy = InexactProxStrategy::parse("injected");
  std::vector<double> counts;
  double worst_excess = -1e300;
  for (const char* name : {"power(1,2)", "power(1,3)", "geometric(0.36787944117144233)"}) {
    VdisaEngine engine(inst, w, s, EpsilonSchedule::parse(name), strategy);
    std::size_t k = 0;
    double re = 1.0;
    while (re >= opts.stop.tol && k < opts.stop.max_iters) {
      const StepRecord before_record = engine.last_step();
      const SolverState before = engine.state();
      engine.iterate();
      ++k;
      const double eps = engine.last_epsilon();
      for (std::size_t i = 0; i < inst.agents().size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        const double r = check_prox_optimality(*inst.agent(i).g, before.x2.col(c), s.tau(c),
                                               engine.state().xbar2.col(c), before.y2.col(c));
        worst_excess = std::max(worst_excess, r - eps);
      }
      re = relative_error(engine.state().x1, ref.x_star);
    }
    o.detail << ", " << name << ' ' << k;
    o.require(re < opts.stop.tol, std::string("convergence of ") + name);
    counts.push_back(static_cast<double>(k));
  }
  const double lo = *std::min_element(counts.begin(), counts.end());
  const double hi = *std::max_element(counts.begin(), counts.end());
  o.detail << "; spread " << hi / lo - 1.0 << ", worst certificate excess " << worst_excess;
  o.require(hi <= 1.15 * lo, "schedules within 15%");
  for (double c : counts) o.require(std::abs(c - exact_iters) <= 0.25 * exact_iters, "within 25% of exact DISA");
  o.require(worst_excess <= 1e-9, "certificates");

  VdisaEngine unsafe(inst, w, s, EpsilonSchedule::power(1.0, 1.0, true), InexactProxStrategy::parse("adversarial"));
  bool stalled = false;
  try {
    vdisa_run(unsafe, opts);
  } catch (const BudgetExceeded&) {
    stalled = true;
  }
  o.detail << "; unsafe 1/k adversarial run " << (stalled ? "exhausted its budget" : "converged") << "; ";
  o.require(stalled, "unsafe run fails");
  return o;
}

Outcome prox_library() {
  Outcome o;
  std::mt19937_64 rng(700);
  Vector upper(4);
  upper << 0.5, -1.0, 2.0, 0.0;
  const std::vector<ProxPtr> ops{make_zero_prox(),           make_l1_prox(0.7),          make_euclidean_norm_prox(1.3),
                                 make_linf_prox(0.9),        make_elastic_net_prox(0.4, 0.6), make_hinge_prox(0.8),
                                 make_box_upper_prox(upper)};
  double worst_expansion = -1e300, worst_oracle = 0.0, worst_moreau = 0.0;
  for (const ProxPtr& g : ops) {
    const bool is_box = g->name().find("box") != std::string::npos;
    for (int t = 0; t < 100; ++t) {
      const double step = 0.1 + 0.02 * t;
      const Vector u = oracle::random_vector(rng, 4, 3.0), v = oracle::random_vector(rng, 4, 3.0);
      worst_expansion = std::max(worst_expansion, (g->prox(u, step) - g->prox(v, step)).norm() - (u - v).norm());

      const double beta = 0.05 + 0.05 * t;
      const Vector recon = moreau_conjugate_prox(*g, u, beta) + beta * g->prox(u / beta, 1.0 / beta);
      worst_moreau = std::max(worst_moreau, (recon - u).norm() / std::max(1.0, u.norm()));

      const Vector x = oracle::random_vector(rng, 2, 2.0);
      Vector ref;
      if (is_box) {
        ref = x.cwiseMin(upper.head(2));
        const Vector p = make_box_upper_prox(upper.head(2))->prox(x, step);
        worst_oracle = std::max(worst_oracle, (p - ref).cwiseAbs().maxCoeff());
        continue;
      }
      ref = oracle::prox_2d([&](const Vector& z) { return g->value(z); }, x, step, 10.0);
      worst_oracle = std::max(worst_oracle, (g->prox(x, step) - ref).cwiseAbs().maxCoeff());
    }
  }
  o.detail << ops.size() << " operators; worst expansion " << worst_expansion << ", worst oracle gap " << worst_oracle
           << ", worst Moreau residual " << worst_moreau << "; ";
  o.require(worst_expansion <= 1e-12, "nonexpansiveness");
  o.require(worst_oracle <= 1e-6, "oracle agreement");
  o.require(worst_moreau <= 1e-12, "Moreau identity");
  return o;
}

Outcome logistic_experiment() {
  Outcome o;
  ExperimentConfig c;
  c.problem.kind = "logistic";
  c.problem.agents = 10;
  c.problem.samples = 1000;
  c.problem.dim = 20;
  c.topology = TopologySpec::parse("cycle");
  c.stop.kind = StoppingRule::Kind::relative_error;
  c.stop.tol = 1e-5;
  c.stop.max_iters = 50000;
  c.solver.baseline_policy = "logistic";
  c.solver.baseline_beta = 0.01;
  std::map<std::string, std::size_t> iters;
  std::map<std::string, ExitCode> exits;
  for (const char* name : {"disa", "condat_vu", "lalm"}) {
    ExperimentConfig run = c;
    run.solver.name = name;
    if (run.solver.name == "disa") {
      run.solver.tau = 0.25;
      run.solver.beta = 2.0;
    }
    const ExperimentResult r = run_experiment(run, false);
    iters[name] = r.trace.rows.size();
    exits[name] = r.exit;
    o.detail << name << ' ' << iters[name] << (r.exit == ExitCode::ok ? "" : " (not converged)") << "; ";
  }
  o.require(exits["disa"] == ExitCode::ok, "DISA convergence");
  o.require(iters["disa"] < iters["condat_vu"], "DISA beats Condat-Vu");
  o.require(iters["disa"] < iters["lalm"], "DISA beats L-ALM");
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  const auto report = [&](int id, double limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what() << "; ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < limit_s, "runtime under " + std::to_string(static_cast<int>(limit_s)) + " s");
    failed += o.pass ? 0 : 1;
    std::printf("[%s] criterion %d (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", id, secs, o.detail.str().c_str());
    std::fflush(stdout);
  };
  report(1, 120.0, step_size_robustness);
  report(2, 180.0, baseline_contrast);
  report(3, 60.0, equivalence_suites);
  const SmallInstance si;
  report(4, 60.0, [&] { return theorem_inequalities(si); });
  report(5, 60.0, [&] { return rate_shape(si); });
  report(6, 180.0, inexact_variant);
  report(7, 60.0, prox_library);
  report(8, 180.0, logistic_experiment);
  std::printf("%d of 8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
