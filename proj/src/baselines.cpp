#include "disa/baselines.hpp"

#include <chrono>
#include <cmath>

namespace disa {

ReformulatedProblem::ReformulatedProblem(const ProblemInstance& inst, const MixingMatrix& w)
    : inst_(&inst), w_(&w) {
  if (inst.agent_count() * (inst.primal_dim() + inst.map_dim()) > kDenseSizeLimit)
    throw SizeGuard("baselines are limited to m(n+p) <= 5000");
  if (w.size() != inst.agent_count()) throw DimensionMismatch("mixing matrix does not match the agent count");
  factors_ = dense_consensus_factors(w);
  lipschitz_ = inst.lipschitz_constants().maxCoeff();
}

AgentBlocks ReformulatedProblem::gradient(const AgentBlocks& x1) const {
  AgentBlocks g(x1.rows(), x1.cols());
  for (Eigen::Index i = 0; i < x1.cols(); ++i) g.col(i) = inst_->agent(static_cast<std::size_t>(i)).f->gradient(x1.col(i));
  return g;
}

std::pair<AgentBlocks, AgentBlocks> ReformulatedProblem::apply_c(const AgentBlocks& x1) const {
  AgentBlocks z1(static_cast<Eigen::Index>(inst_->map_dim()), x1.cols());
  for (Eigen::Index i = 0; i < x1.cols() && z1.rows() > 0; ++i)
    z1.col(i) = inst_->agent(static_cast<std::size_t>(i)).U * x1.col(i);
  return {std::move(z1), x1 * factors_.sqrt_half_laplacian};
}

AgentBlocks ReformulatedProblem::apply_c_transpose(const AgentBlocks& z1, const AgentBlocks& z2) const {
  AgentBlocks x = z2 * factors_.sqrt_half_laplacian;
  for (Eigen::Index i = 0; i < x.cols() && z1.rows() > 0; ++i)
    x.col(i) += inst_->agent(static_cast<std::size_t>(i)).U.transpose() * z1.col(i);
  return x;
}

double ReformulatedProblem::c_norm_sq() const {
  const auto n = static_cast<Eigen::Index>(inst_->primal_dim());
  const auto m = static_cast<Eigen::Index>(inst_->agent_count());
  return power_iteration(
      [&](const Vector& v) {
        const AgentBlocks x = v.reshaped(n, m);
        auto [z1, z2] = apply_c(x);
        return Vector(apply_c_transpose(z1, z2).reshaped());
      },
      static_cast<std::size_t>(n * m));
}

double ReformulatedProblem::b_norm_sq() const {
  const auto n = static_cast<Eigen::Index>(inst_->primal_dim());
  const auto p = static_cast<Eigen::Index>(inst_->map_dim());
  const auto m = static_cast<Eigen::Index>(inst_->agent_count());
  const Matrix& r = factors_.sqrt_half_laplacian;
  return power_iteration(
      [&](const Vector& v) {
        const AgentBlocks x1 = v.head(n * m).reshaped(n, m);
        const AgentBlocks x2 = v.tail(p * m).reshaped(p, m);
        const AgentBlocks b1 = x1 * r;
        AgentBlocks b2(p, m);
        AgentBlocks t1 = b1 * r;
        for (Eigen::Index i = 0; i < m && p > 0; ++i) {
          const Matrix& u = inst_->agent(static_cast<std::size_t>(i)).U;
          b2.col(i) = u * x1.col(i) - x2.col(i);
          t1.col(i) += u.transpose() * b2.col(i);
        }
        Vector out(v.size());
        out.head(n * m) = t1.reshaped();
        if (p > 0) out.tail(p * m) = (-b2).reshaped();
        return out;
      },
      static_cast<std::size_t>((n + p) * m));
}

DivergenceIndicator::DivergenceIndicator(double initial_distance, double factor)
    : threshold_(factor * std::max(initial_distance, 1e-12)) {}

bool DivergenceIndicator::update(double distance) {
  if (!std::isfinite(distance) || distance > threshold_) fired_ = true;
  return fired_;
}

BaselinePolicy parse_baseline_policy(const std::string& name) {
  if (name == "fig4") return BaselinePolicy::fig4;
  if (name == "table3") return BaselinePolicy::table3;
  if (name == "logistic") return BaselinePolicy::logistic;
  throw ConfigError("unknown baseline step policy '" + name + "'");
}

BaselineSteps baseline_step_sizes(const Vector& lipschitz, BaselinePolicy policy, double operator_norm_sq,
                                  double beta) {
  if (lipschitz.size() == 0 || !(lipschitz.minCoeff() > 0.0)) throw ConfigError("Lipschitz constants must be positive");
  BaselineSteps s;
  switch (policy) {
    case BaselinePolicy::fig4:
      s.tau = 1.0 / lipschitz.maxCoeff() - 1e-4;
      if (!(s.tau > 0.0)) throw ConfigError("fig4 policy gives a nonpositive step");
      s.beta = 0.01 / s.tau;
      break;
    case BaselinePolicy::table3: {
      if (!(beta > 0.0)) throw ConfigError("table3 policy needs beta > 0");
      double smallest = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < lipschitz.size(); ++i)
        smallest = std::min(smallest, 1.0 / (0.5 * lipschitz[i] + beta * operator_norm_sq));
      s.tau = (1.0 - 1e-4) * smallest;
      s.beta = beta;
      break;
    }
    case BaselinePolicy::logistic:
      s.tau = 0.25;
      s.beta = 0.01;
      break;
  }
  return s;
}

bool baseline_condition_holds(const BaselineSteps& s, double operator_norm_sq, double lipschitz) {
  return s.tau * s.beta * operator_norm_sq + 0.5 * s.tau * lipschitz < 1.0;
}

CondatVu::CondatVu(const ReformulatedProblem& rp, BaselineSteps steps) : rp_(&rp), steps_(steps) {
  const auto n = static_cast<Eigen::Index>(rp.instance().primal_dim());
  const auto p = static_cast<Eigen::Index>(rp.instance().map_dim());
  const auto m = static_cast<Eigen::Index>(rp.instance().agent_count());
  x1_ = AgentBlocks::Zero(n, m);
  z1_ = AgentBlocks::Zero(p, m);
  z2_ = AgentBlocks::Zero(n, m);
}

void CondatVu::set_state(AgentBlocks x1, AgentBlocks z1, AgentBlocks z2) {
  if (x1.rows() != x1_.rows() || x1.cols() != x1_.cols() || z1.rows() != z1_.rows() || z1.cols() != z1_.cols() ||
      z2.rows() != z2_.rows() || z2.cols() != z2_.cols())
    throw DimensionMismatch("Condat-Vu state has the wrong shape");
  x1_ = std::move(x1);
  z1_ = std::move(z1);
  z2_ = std::move(z2);
}

void CondatVu::iterate() {
  const double tau = steps_.tau, beta = steps_.beta;
  const AgentBlocks next = x1_ - tau * (rp_->gradient(x1_) + rp_->apply_c_transpose(z1_, z2_));
  auto [c1, c2] = rp_->apply_c(2.0 * next - x1_);
  for (Eigen::Index i = 0; i < z1_.cols() && z1_.rows() > 0; ++i) {
    const Vector v = z1_.col(i) + beta * c1.col(i);
    z1_.col(i) = moreau_conjugate_prox(*rp_->instance().agent(static_cast<std::size_t>(i)).g, v, beta);
  }
  z2_ += beta * c2;
  x1_ = next;
}

LinearizedAlm::LinearizedAlm(const ReformulatedProblem& rp, BaselineSteps steps) : rp_(&rp), steps_(steps) {
  const auto n = static_cast<Eigen::Index>(rp.instance().primal_dim());
  const auto p = static_cast<Eigen::Index>(rp.instance().map_dim());
  const auto m = static_cast<Eigen::Index>(rp.instance().agent_count());
  w_ = {AgentBlocks::Zero(n, m), AgentBlocks::Zero(p, m), AgentBlocks::Zero(n, m), AgentBlocks::Zero(p, m)};
}

void LinearizedAlm::set_state(PrimalDualPoint w) {
  if (w.x1.rows() != w_.x1.rows() || w.x1.cols() != w_.x1.cols() || w.x2.rows() != w_.x2.rows() ||
      w.y1.rows() != w_.y1.rows() || w.y2.rows() != w_.y2.rows())
    throw DimensionMismatch("L-ALM state has the wrong shape");
  w_ = std::move(w);
}

std::pair<AgentBlocks, AgentBlocks> LinearizedAlm::apply_b(const AgentBlocks& x1, const AgentBlocks& x2) const {
  auto [ux, vx] = rp_->apply_c(x1);
  return {std::move(vx), ux - x2};
}

std::pair<AgentBlocks, AgentBlocks> LinearizedAlm::apply_b_transpose(const AgentBlocks& y1,
                                                                      const AgentBlocks& y2) const {
  return {rp_->apply_c_transpose(y2, y1), -y2};
}

void LinearizedAlm::iterate() {
  const double tau = steps_.tau, beta = steps_.beta;
  auto [bx1, bx2] = apply_b(w_.x1, w_.x2);
  auto [d1, d2] = apply_b_transpose(w_.y1 + beta * bx1, w_.y2 + beta * bx2);
  w_.x1 = w_.x1 - tau * (rp_->gradient(w_.x1) + d1);
  const AgentBlocks arg = w_.x2 - tau * d2;
  for (Eigen::Index i = 0; i < arg.cols() && arg.rows() > 0; ++i)
    w_.x2.col(i) = rp_->instance().agent(static_cast<std::size_t>(i)).g->prox(arg.col(i), tau);
  auto [n1, n2] = apply_b(w_.x1, w_.x2);
  w_.y1 += beta * n1;
  w_.y2 += beta * n2;
}

NidsRecursion::NidsRecursion(const ProblemInstance& inst, const MixingMatrix& w, double tau)
    : inst_(&inst), w_(&w), tau_(tau) {
  if (!(tau > 0.0)) throw Error("NIDS step must be positive");
  if (w.size() != inst.agent_count()) throw DimensionMismatch("mixing matrix does not match the agent count");
  for (const auto& a : inst.agents()) {
    if (inst.map_dim() > 0 && a.g->name() != "zero") throw Error("NIDS recursion needs g = 0");
  }
  x_ = AgentBlocks::Zero(static_cast<Eigen::Index>(inst.primal_dim()), static_cast<Eigen::Index>(inst.agent_count()));
}

void NidsRecursion::set_state(AgentBlocks x0) {
  if (x0.rows() != x_.rows() || x0.cols() != x_.cols()) throw DimensionMismatch("NIDS state has the wrong shape");
  x_ = std::move(x0);
  started_ = false;
}

AgentBlocks NidsRecursion::gradient(const AgentBlocks& x) const {
  AgentBlocks g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) g.col(i) = inst_->agent(static_cast<std::size_t>(i)).f->gradient(x.col(i));
  return g;
}

AgentBlocks NidsRecursion::half_mix(const AgentBlocks& v) const {
  return 0.5 * (v + gossip_round(*w_, v));
}

void NidsRecursion::iterate() {
  if (!started_) {
    grad_ = gradient(x_);
    x_prev_ = x_;
    grad_prev_ = grad_;
    x_ = half_mix(x_ - tau_ * grad_);
    started_ = true;
  } else {
    AgentBlocks next = half_mix(2.0 * x_ - x_prev_ + tau_ * grad_prev_ - tau_ * grad_);
    x_prev_ = std::move(x_);
    grad_prev_ = std::move(grad_);
    x_ = std::move(next);
  }
  grad_ = gradient(x_);
}

namespace {

Trace baseline_loop(const ProblemInstance& inst, const MixingMatrix& w, const RunOptions& opts,
                    const std::function<void()>& advance, const std::function<const AgentBlocks&()>& current,
                    const std::function<bool()>& finite) {
  if (opts.stop.kind == StoppingRule::Kind::kkt) throw ConfigError("baselines do not support the KKT stopping rule");
  if (opts.stop.kind == StoppingRule::Kind::relative_error && !opts.x_star)
    throw ConfigError("relative-error stopping needs a reference solution");
  Trace trace;
  trace.meta.solver = opts.solver_name;
  trace.meta.seed = opts.seed;
  trace.meta.config_hash = opts.config_hash;
  if (opts.stop.max_iters == 0) return trace;
  AgentBlocks star;
  std::optional<DivergenceIndicator> indicator;
  if (opts.x_star) {
    star = opts.x_star->replicate(1, current().cols());
    indicator.emplace((current() - star).norm());
  }
  double elapsed_ms = 0.0;
  for (std::size_t k = 0; k < opts.stop.max_iters; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    advance();
    elapsed_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const AgentBlocks& x = current();
    const bool ok = finite();
    bool diverged = !ok;
    if (indicator) diverged = indicator->update(ok ? (x - star).norm() : kUnavailable) || diverged;
    if (diverged) {
      trace.status = RunStatus::diverged;
      return trace;
    }
    TraceRow row;
    row.iter = k + 1;
    if (opts.x_star) row.re_err = relative_error(x, star);
    row.consensus = std::sqrt(std::max(0.0, consensus_quadratic_form(w, x)));
    row.objective = inst.objective(x);
    row.ms = elapsed_ms;
    trace.rows.push_back(row);
    if (opts.stop.kind == StoppingRule::Kind::relative_error && row.re_err < opts.stop.tol) {
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

}  // namespace

Trace condat_vu_run(const ReformulatedProblem& rp, BaselineSteps steps, const RunOptions& opts) {
  CondatVu cv(rp, steps);
  return baseline_loop(
      rp.instance(), rp.mixing(), opts, [&] { cv.iterate(); }, [&]() -> const AgentBlocks& { return cv.x1(); },
      [&] { return cv.finite(); });
}

Trace lalm_run(const ReformulatedProblem& rp, BaselineSteps steps, const RunOptions& opts) {
  LinearizedAlm alm(rp, steps);
  return baseline_loop(
      rp.instance(), rp.mixing(), opts, [&] { alm.iterate(); },
      [&]() -> const AgentBlocks& { return alm.point().x1; }, [&] { return alm.finite(); });
}

Trace nids_reference_run(const ProblemInstance& inst, const MixingMatrix& w, double tau, const RunOptions& opts) {
  NidsRecursion nids(inst, w, tau);
  return baseline_loop(
      inst, w, opts, [&] { nids.iterate(); }, [&]() -> const AgentBlocks& { return nids.x(); },
      [&] { return nids.x().allFinite(); });
}

}  // namespace disa
