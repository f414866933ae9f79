#include "disa/solver_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace disa {

namespace {

std::string describe(const char* what, std::size_t agent, double value, double bound) {
  std::ostringstream os;
  os.precision(17);
  os << what << " for agent " << agent << ": " << value << " (bound " << bound << ")";
  return os.str();
}

StepSizes assemble(Vector tau, double beta, const Vector& lipschitz) {
  StepSizes s;
  s.tau = std::move(tau);
  s.beta = beta;
  s.tau_max = s.tau.size() > 0 ? s.tau.maxCoeff() : 0.0;
  s.strict = true;
  for (Eigen::Index i = 0; i < s.tau.size(); ++i) {
    if (!(s.tau[i] * lipschitz[i] < 1.0)) s.strict = false;
  }
  return s;
}

}  // namespace

StepSizes StepSizes::unvalidated(Vector tau, double beta, const Vector& lipschitz) {
  if (tau.size() != lipschitz.size()) throw DimensionMismatch("step sizes and Lipschitz constants differ in length");
  return assemble(std::move(tau), beta, lipschitz);
}

StepSizes validate_step_sizes(const Vector& lipschitz, const Vector& tau, double beta) {
  if (tau.size() != lipschitz.size()) throw DimensionMismatch("step sizes and Lipschitz constants differ in length");
  if (tau.size() == 0) throw Error("no agents");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw StepSizeViolation(0, "dual step must be positive and finite");
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    const auto a = static_cast<std::size_t>(i);
    if (!(lipschitz[i] > 0.0) || !std::isfinite(lipschitz[i]))
      throw StepSizeViolation(a, describe("Lipschitz constant must be positive", a, lipschitz[i], 0.0));
    if (!(tau[i] > 0.0)) throw StepSizeViolation(a, describe("primal step must be positive", a, tau[i], 0.0));
    if (!(tau[i] < 2.0 / lipschitz[i]))
      throw StepSizeViolation(a, describe("primal step violates tau < 2/L", a, tau[i], 2.0 / lipschitz[i]));
    if (!(tau[i] * beta < 1.0))
      throw StepSizeViolation(a, describe("tau*beta must be below 1", a, tau[i] * beta, 1.0));
  }
  return assemble(tau, beta, lipschitz);
}

StepSizes default_step_sizes(const Vector& lipschitz, StepPolicy policy) {
  for (Eigen::Index i = 0; i < lipschitz.size(); ++i) {
    if (!(lipschitz[i] > 0.0))
      throw StepSizeViolation(static_cast<std::size_t>(i), "Lipschitz constant must be positive");
  }
  Vector tau(lipschitz.size());
  switch (policy) {
    case StepPolicy::lasso_default:
      for (Eigen::Index i = 0; i < tau.size(); ++i) tau[i] = 2.0 / lipschitz[i] - 1e-4;
      break;
    case StepPolicy::logistic_default:
      tau.setConstant(0.25);
      break;
  }
  const double beta = 0.5 / tau.maxCoeff();
  return validate_step_sizes(lipschitz, tau, beta);
}

DualPreconditioner::DualPreconditioner(const ProblemInstance& inst, const StepSizes& steps) {
  const std::size_t m = inst.agent_count();
  if (steps.agent_count() != m) throw DimensionMismatch("step sizes do not match the agent count");
  const double tb = steps.tau_max * steps.beta;
  if (inst.map_dim() > 0 && !(tb < 1.0)) throw FactorizationFailure("tau*beta must be below 1 to build S_i");
  matrices_.resize(m);
  factors_.resize(m);
  const auto p = static_cast<Eigen::Index>(inst.map_dim());
  for (std::size_t i = 0; i < m; ++i) {
    const double ti = steps.tau[static_cast<Eigen::Index>(i)];
    const Matrix& u = inst.agent(i).U;
    if (p == 0) {
      matrices_[i].resize(0, 0);
      continue;
    }
    const double coupling = ti * (1.0 - tb + ti * steps.beta) / (1.0 - tb);
    Matrix s = coupling * (u * u.transpose());
    s.diagonal().array() += 2.0 * ti;
    s = 0.5 * (s + s.transpose());
    factors_[i].compute(s);
    if (factors_[i].info() != Eigen::Success) throw FactorizationFailure("S_i is not positive definite");
    matrices_[i] = std::move(s);
  }
}

Vector DualPreconditioner::apply_inverse(std::size_t i, const Vector& r) const {
  if (r.size() != matrices_[i].rows()) throw DimensionMismatch("right-hand side does not match S_i");
  if (r.size() == 0) return r;
  return factors_[i].solve(r);
}

SolverState SolverState::zeros(std::size_t n, std::size_t p, std::size_t m) {
  const auto nn = static_cast<Eigen::Index>(n);
  const auto pp = static_cast<Eigen::Index>(p);
  const auto mm = static_cast<Eigen::Index>(m);
  SolverState s;
  s.x1 = AgentBlocks::Zero(nn, mm);
  s.x2 = AgentBlocks::Zero(pp, mm);
  s.y1_tilde = AgentBlocks::Zero(nn, mm);
  s.y2 = AgentBlocks::Zero(pp, mm);
  s.xbar1 = AgentBlocks::Zero(nn, mm);
  s.xbar2 = AgentBlocks::Zero(pp, mm);
  return s;
}

PrimalDualPoint to_full_coordinates(const SolverState& s, const DenseConsensusFactors& f) {
  return {s.x1, s.x2, s.y1_tilde * f.pseudo_inverse, s.y2};
}

MetricOperators::MetricOperators(const ProblemInstance& inst, const StepSizes& steps, const DualPreconditioner& pc,
                                 DenseConsensusFactors factors)
    : inst_(&inst), steps_(steps), pc_(&pc), factors_(std::move(factors)), lipschitz_(inst.lipschitz_constants()) {
  if (static_cast<std::size_t>(factors_.sqrt_half_laplacian.rows()) != inst.agent_count())
    throw DimensionMismatch("consensus factors do not match the agent count");
}

double MetricOperators::checked(double value) {
  if (value < -1e-12) throw NegativeForm("quadratic form evaluated negative");
  return value;
}

double MetricOperators::primal_part(const PrimalDualPoint& d, double lipschitz_weight) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.x1.cols(); ++i) {
    const double w = 1.0 / steps_.tau[i] - lipschitz_weight * lipschitz_[i];
    acc += w * d.x1.col(i).squaredNorm();
    if (d.x2.rows() > 0) acc += w * d.x2.col(i).squaredNorm();
  }
  return acc;
}

double MetricOperators::dual_q_part(const PrimalDualPoint& d) const {
  double acc = d.y1.squaredNorm() / steps_.beta;
  for (Eigen::Index i = 0; i < d.y2.cols(); ++i) {
    if (d.y2.rows() == 0) break;
    acc += d.y2.col(i).dot(pc_->matrix(static_cast<std::size_t>(i)) * d.y2.col(i));
  }
  return acc;
}

double MetricOperators::dual_bgb_part(const PrimalDualPoint& d) const {
  auto [bx1, bx2] = b_transpose(d.y1, d.y2);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < bx1.cols(); ++i) {
    acc += steps_.tau[i] * (bx1.col(i).squaredNorm() + (bx2.rows() > 0 ? bx2.col(i).squaredNorm() : 0.0));
  }
  return acc;
}

std::pair<AgentBlocks, AgentBlocks> MetricOperators::b_transpose(const AgentBlocks& y1, const AgentBlocks& y2) const {
  AgentBlocks top = y1 * factors_.sqrt_half_laplacian;
  for (Eigen::Index i = 0; i < y2.cols() && y2.rows() > 0; ++i) {
    top.col(i) += inst_->agent(static_cast<std::size_t>(i)).U.transpose() * y2.col(i);
  }
  return {std::move(top), -y2};
}

std::pair<AgentBlocks, AgentBlocks> MetricOperators::b_apply(const AgentBlocks& x1, const AgentBlocks& x2) const {
  AgentBlocks top = x1 * factors_.sqrt_half_laplacian;
  AgentBlocks bottom(x2.rows(), x2.cols());
  for (Eigen::Index i = 0; i < x2.cols() && x2.rows() > 0; ++i) {
    bottom.col(i) = inst_->agent(static_cast<std::size_t>(i)).U * x1.col(i) - x2.col(i);
  }
  return {std::move(top), std::move(bottom)};
}

double MetricOperators::h_norm_sq(const PrimalDualPoint& d) const {
  return checked(primal_part(d, 0.0) + dual_q_part(d));
}

double MetricOperators::m_norm_sq(const PrimalDualPoint& d) const {
  return checked(primal_part(d, 0.5) + dual_q_part(d) - dual_bgb_part(d));
}

double MetricOperators::m1_norm_sq(const PrimalDualPoint& d) const {
  return checked(primal_part(d, 1.0) + dual_q_part(d) - dual_bgb_part(d));
}

MetricBounds sample_metric_bounds(const MetricOperators& ops, std::size_t n, std::size_t p, std::size_t m,
                                  std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto draw = [&](std::size_t rows) {
    AgentBlocks b(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m));
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, j) = normal(rng);
    return b;
  };
  const Matrix& pinv = ops.factors().pseudo_inverse;
  const Matrix& r = ops.factors().sqrt_half_laplacian;
  MetricBounds out;
  out.c1 = std::numeric_limits<double>::infinity();
  out.min_m_over_h = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    PrimalDualPoint d{draw(n), draw(p), draw(n), draw(p)};
    // Dual y₁ differences that arise in practice lie in range(√V).
    d.y1 = d.y1 * r * pinv;
    const double norm = d.squared_norm();
    const double h = ops.h_norm_sq(d);
    const double mm = ops.m_norm_sq(d);
    out.c1 = std::min(out.c1, std::sqrt(std::max(mm, 0.0) / norm));
    out.c2 = std::max(out.c2, std::sqrt(h / norm));
    out.min_m_over_h = std::min(out.min_m_over_h, mm / h);
  }
  return out;
}

}  // namespace disa
