#include "disa/disa.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <chrono>
#include <cmath>

namespace disa {

StoppingRule::Kind StoppingRule::parse_kind(const std::string& name) {
  if (name == "relative_error" || name == "re_err") return Kind::relative_error;
  if (name == "kkt") return Kind::kkt;
  if (name == "max_iters") return Kind::max_iters;
  throw ConfigError("unknown stopping rule '" + name + "'");
}

std::string StoppingRule::kind_name(Kind k) {
  switch (k) {
    case Kind::relative_error: return "relative_error";
    case Kind::kkt: return "kkt";
    case Kind::max_iters: return "max_iters";
  }
  return "unknown";
}

EngineBase::EngineBase(const ProblemInstance& inst, const MixingMatrix& w, StepSizes steps, Execution exec)
    : inst_(&inst), w_(&w), steps_(std::move(steps)), exec_(exec), counters_(inst.agent_count()) {
  if (w.size() != inst.agent_count()) throw DimensionMismatch("mixing matrix does not match the agent count");
  if (steps_.agent_count() != inst.agent_count()) throw DimensionMismatch("step sizes do not match the agent count");
  pc_ = DualPreconditioner(inst, steps_);
  state_ = SolverState::zeros(inst.primal_dim(), inst.map_dim(), inst.agent_count());
}

void EngineBase::set_state(SolverState s) {
  const auto n = static_cast<Eigen::Index>(inst_->primal_dim());
  const auto p = static_cast<Eigen::Index>(inst_->map_dim());
  const auto m = static_cast<Eigen::Index>(inst_->agent_count());
  auto check = [](const AgentBlocks& b, Eigen::Index r, Eigen::Index c, const char* name) {
    if (b.rows() != r || b.cols() != c) throw DimensionMismatch(std::string("state block ") + name + " has the wrong shape");
  };
  check(s.x1, n, m, "x1");
  check(s.x2, p, m, "x2");
  check(s.y1_tilde, n, m, "y1_tilde");
  check(s.y2, p, m, "y2");
  if (s.xbar1.size() == 0) s.xbar1 = AgentBlocks::Zero(n, m);
  if (s.xbar2.size() == 0 && p > 0) s.xbar2 = AgentBlocks::Zero(p, m);
  state_ = std::move(s);
  record_ = StepRecord{};
  counters_ = CallCounters(inst_->agent_count());
}

void EngineBase::snapshot() {
  record_.x1_prev = state_.x1;
  record_.x2_prev = state_.x2;
  record_.y1_tilde_prev = state_.y1_tilde;
  record_.y2_prev = state_.y2;
}

void DisaEngine::iterate() {
  const auto& ops = kernels::ops_for(exec_);
  const KernelContext ctx = context();
  snapshot();
  ops.gradients(ctx, record_.x1_prev, grad_, counters_);
  ops.primal_linear(ctx, record_.x1_prev, grad_, record_.y1_tilde_prev, record_.y2_prev, state_.xbar1);
  ops.prox_step(ctx, record_.x2_prev, record_.y2_prev, state_.xbar2, counters_);
  ops.gossip(ctx, state_.xbar1, record_.mixed_xbar1, counters_);
  ops.dual_update(ctx, state_.xbar1, state_.xbar2, record_.mixed_xbar1, state_.y1_tilde, state_.y2);
  ops.primal_linear(ctx, record_.x1_prev, grad_, state_.y1_tilde, state_.y2, state_.x1);
  ops.prox_step(ctx, record_.x2_prev, state_.y2, state_.x2, counters_);
  record_.grad_prev = grad_;
  ++counters_.iterations;
}

void disa_iterate(DisaEngine& engine) { engine.iterate(); }

TraceRow diagnostic_row(const EngineBase& engine, const RunOptions& opts) {
  const SolverState& s = engine.state();
  TraceRow row;
  row.iter = engine.counters().iterations;
  if (opts.x_star) row.re_err = relative_error(s.x1, *opts.x_star);
  row.consensus = std::sqrt(std::max(0.0, consensus_quadratic_form(engine.mixing(), s.x1)));
  row.kkt_norm = kkt_element(engine.instance(), engine.steps(), s, engine.last_step()).norm();
  row.objective = engine.instance().objective(s.x1);
  if (opts.verifier) {
    row.h_dist = opts.verifier->h_dist(s);
    row.m_step = opts.verifier->m_step(s, engine.last_step());
  }
  return row;
}

namespace {

bool finite_state(const SolverState& s) {
  return s.x1.allFinite() && s.x2.allFinite() && s.y1_tilde.allFinite() && s.y2.allFinite();
}

}  // namespace

Trace run_engine(EngineBase& engine, const RunOptions& opts, const std::function<void()>& advance,
                 const std::function<void(TraceRow&)>& annotate) {
  if (opts.stop.kind == StoppingRule::Kind::relative_error && !opts.x_star)
    throw ConfigError("relative-error stopping needs a reference solution");
  Trace trace;
  trace.meta.solver = opts.solver_name;
  trace.meta.seed = opts.seed;
  trace.meta.config_hash = opts.config_hash;
  if (opts.verifier) trace.meta.h_dist_initial = opts.verifier->h_dist(engine.state());
  if (opts.stop.max_iters == 0) return trace;
  double elapsed_ms = 0.0;
  for (std::size_t k = 0; k < opts.stop.max_iters; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    advance();
    elapsed_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!finite_state(engine.state())) {
      trace.status = RunStatus::diverged;
      return trace;
    }
    TraceRow row = diagnostic_row(engine, opts);
    row.ms = elapsed_ms;
    if (annotate) annotate(row);
    trace.rows.push_back(row);
    const bool done = (opts.stop.kind == StoppingRule::Kind::relative_error && row.re_err < opts.stop.tol) ||
                      (opts.stop.kind == StoppingRule::Kind::kkt && row.kkt_norm < opts.stop.tol);
    if (done) {
      trace.status = RunStatus::converged;
      return trace;
    }
  }
  if (opts.stop.kind == StoppingRule::Kind::max_iters) {
    trace.status = RunStatus::completed;
    return trace;
  }
  trace.status = RunStatus::budget;
  throw BudgetExceeded(std::move(trace));
}

Trace disa_run(DisaEngine& engine, const RunOptions& opts) {
  return run_engine(engine, opts, [&engine] { engine.iterate(); });
}

CompactDisa::CompactDisa(const ProblemInstance& inst, const MixingMatrix& w, const StepSizes& steps)
    : inst_(&inst), steps_(steps), n_(inst.primal_dim()), p_(inst.map_dim()), m_(inst.agent_count()) {
  const std::size_t total = m_ * (n_ + p_);
  if (total > kDenseSizeLimit) throw SizeGuard("dense compact form limited to m(n+p) <= 5000");
  const auto n = static_cast<Eigen::Index>(n_);
  const auto p = static_cast<Eigen::Index>(p_);
  const auto m = static_cast<Eigen::Index>(m_);
  const Eigen::Index top = n * m;
  const Eigen::Index dim = static_cast<Eigen::Index>(total);
  const DenseConsensusFactors f = dense_consensus_factors(w);
  const DualPreconditioner pc(inst, steps);

  b_ = Matrix::Zero(dim, dim);
  b_.topLeftCorner(top, top) = Eigen::kroneckerProduct(f.sqrt_half_laplacian, Matrix::Identity(n, n));
  q_ = Matrix::Zero(dim, dim);
  q_.topLeftCorner(top, top).diagonal().setConstant(1.0 / steps.beta);
  gamma_.resize(dim);
  for (Eigen::Index i = 0; i < m; ++i) {
    gamma_.segment(i * n, n).setConstant(steps.tau[i]);
    if (p == 0) continue;
    gamma_.segment(top + i * p, p).setConstant(steps.tau[i]);
    b_.block(top + i * p, i * n, p, n) = inst.agent(static_cast<std::size_t>(i)).U;
    b_.block(top + i * p, top + i * p, p, p) = -Matrix::Identity(p, p);
    q_.block(top + i * p, top + i * p, p, p) = pc.matrix(static_cast<std::size_t>(i));
  }
  q_factor_.compute(q_);
  if (q_factor_.info() != Eigen::Success) throw FactorizationFailure("Q is not positive definite");
  x_ = Vector::Zero(dim);
  y_ = Vector::Zero(dim);
}

void CompactDisa::set_point(const PrimalDualPoint& w) {
  const auto n = static_cast<Eigen::Index>(n_ * m_);
  const auto p = static_cast<Eigen::Index>(p_ * m_);
  x_.head(n) = w.x1.reshaped();
  y_.head(n) = w.y1.reshaped();
  if (p > 0) {
    x_.tail(p) = w.x2.reshaped();
    y_.tail(p) = w.y2.reshaped();
  }
}

Vector CompactDisa::gradient(const Vector& x) const {
  Vector g = Vector::Zero(x.size());
  const auto n = static_cast<Eigen::Index>(n_);
  for (std::size_t i = 0; i < m_; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    g.segment(c * n, n) = inst_->agent(i).f->gradient(x.segment(c * n, n));
  }
  return g;
}

Vector CompactDisa::prox_g(const Vector& v) const {
  Vector out = v;
  const auto top = static_cast<Eigen::Index>(n_ * m_);
  const auto p = static_cast<Eigen::Index>(p_);
  for (std::size_t i = 0; i < m_ && p > 0; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    out.segment(top + c * p, p) = inst_->agent(i).g->prox(v.segment(top + c * p, p), steps_.tau[c]);
  }
  return out;
}

void CompactDisa::iterate() {
  const Vector grad = gradient(x_);
  const Vector xbar = prox_g(x_ - gamma_.cwiseProduct(grad + b_.transpose() * y_));
  y_ += q_factor_.solve(b_ * xbar);
  x_ = prox_g(x_ - gamma_.cwiseProduct(grad + b_.transpose() * y_));
}

PrimalDualPoint CompactDisa::point() const {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto p = static_cast<Eigen::Index>(p_);
  const auto m = static_cast<Eigen::Index>(m_);
  PrimalDualPoint w;
  w.x1 = x_.head(n * m).reshaped(n, m);
  w.y1 = y_.head(n * m).reshaped(n, m);
  w.x2 = x_.tail(p * m).reshaped(p, m);
  w.y2 = y_.tail(p * m).reshaped(p, m);
  return w;
}

AgentBlocks CompactDisa::y1_tilde() const {
  const auto n = static_cast<Eigen::Index>(n_ * m_);
  const Vector top = b_.topLeftCorner(n, n) * y_.head(n);
  return top.reshaped(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m_));
}

ReferenceSolution reference_solution(const ProblemInstance& inst, const MixingMatrix& w, double tol,
                                     std::size_t max_iters) {
  const Vector lipschitz = inst.lipschitz_constants();
  Vector tau(lipschitz.size());
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    if (!(lipschitz[i] > 0.0)) throw StepSizeViolation(static_cast<std::size_t>(i), "Lipschitz constant must be positive");
    tau[i] = 1.0 / lipschitz[i];
  }
  StepSizes steps = validate_step_sizes(lipschitz, tau, 0.5 / tau.maxCoeff());

  double scale = 1.0;
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(inst.primal_dim()));
  for (const auto& a : inst.agents()) scale = std::max(scale, a.f->gradient(zero).norm());

  DisaEngine engine(inst, w, steps);
  RunOptions opts;
  opts.stop.kind = StoppingRule::Kind::kkt;
  opts.stop.tol = tol * scale;
  opts.stop.max_iters = max_iters;
  ReferenceSolution ref;
  ref.scale = scale;
  ref.steps = steps;
  double certificate = 0.0;
  std::size_t k = 0;
  for (; k < max_iters; ++k) {
    engine.iterate();
    if (!finite_state(engine.state())) throw NoConvergence("reference run produced non-finite iterates");
    certificate = kkt_element(inst, steps, engine.state(), engine.last_step()).norm();
    if (certificate < opts.stop.tol) break;
  }
  if (k == max_iters) {
    Trace t;
    t.meta.solver = "reference";
    t.status = RunStatus::budget;
    throw BudgetExceeded(std::move(t));
  }
  ref.iterations = k + 1;
  ref.certificate = certificate;
  ref.state = engine.state();
  ref.x_star = ref.state.x1.rowwise().mean();
  ref.objective_star = inst.objective(ref.x_star);
  return ref;
}

}  // namespace disa
