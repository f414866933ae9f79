#pragma once

#include "disa/common.hpp"
#include "disa/network.hpp"
#include "disa/problems.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace disa {

// Per-agent primal steps τ_i and the shared dual step β.
struct StepSizes {
  Vector tau;
  double beta = 0.0;
  double tau_max = 0.0;
  // All τ_i < 1/L_i: the regime in which the primal-dual gap bound holds.
  bool strict = false;

  std::size_t agent_count() const { return static_cast<std::size_t>(tau.size()); }

  // Skips the 0 < τ_i < 2/L_i, τ_i β < 1 check. Only the degenerate
  // no-auxiliary-block configurations (e.g. β = 1/τ for the NIDS reduction)
  // should need this.
  static StepSizes unvalidated(Vector tau, double beta, const Vector& lipschitz);
};

StepSizes validate_step_sizes(const Vector& lipschitz, const Vector& tau, double beta);

enum class StepPolicy { lasso_default, logistic_default };

// lasso_default: τ_i = 2/L_i − 1e-4, τβ = ½ with τ = max τ_i.
// logistic_default: τ_i = 0.25, τβ = ½.
StepSizes default_step_sizes(const Vector& lipschitz, StepPolicy policy);

// S_i = 2τ_i I + τ_i(1 − τβ + τ_iβ)/(1 − τβ) · U_i U_iᵀ with τ = max τ_i, and
// its Cholesky factor, computed once per run.
class DualPreconditioner {
 public:
  DualPreconditioner() = default;
  DualPreconditioner(const ProblemInstance& inst, const StepSizes& steps);

  std::size_t agent_count() const { return matrices_.size(); }
  const Matrix& matrix(std::size_t i) const { return matrices_[i]; }
  // z with S_i z = r.
  Vector apply_inverse(std::size_t i, const Vector& r) const;

 private:
  std::vector<Matrix> matrices_;
  std::vector<Eigen::LLT<Matrix>> factors_;
};

// Per-agent iterate of DISA / V-DISA. ỹ₁ = √V y₁ is what the agents store.
struct SolverState {
  AgentBlocks x1;        // n × m
  AgentBlocks x2;        // p × m
  AgentBlocks y1_tilde;  // n × m
  AgentBlocks y2;        // p × m
  AgentBlocks xbar1;     // half-step blocks from the latest iteration
  AgentBlocks xbar2;

  static SolverState zeros(std::size_t n, std::size_t p, std::size_t m);
};

// Everything one iteration consumed, kept so diagnostics can be evaluated
// after the fact without extra oracle calls in the solver path.
struct StepRecord {
  AgentBlocks x1_prev, x2_prev;
  AgentBlocks y1_tilde_prev, y2_prev;
  AgentBlocks grad_prev;    // ∇f_i(x1_i) at the previous iterate
  AgentBlocks mixed_xbar1;  // Σ_j W_ij x̄1_j
  AgentBlocks prox_error;   // approximate-prox certificate d per agent; empty for exact steps
};

// (x, y) in the coordinates the analysis uses: y₁ explicit, not ỹ₁.
struct PrimalDualPoint {
  AgentBlocks x1, x2, y1, y2;

  PrimalDualPoint operator-(const PrimalDualPoint& o) const {
    return {x1 - o.x1, x2 - o.x2, y1 - o.y1, y2 - o.y2};
  }
  double squared_norm() const {
    return x1.squaredNorm() + x2.squaredNorm() + y1.squaredNorm() + y2.squaredNorm();
  }
};

// y₁ = ỹ₁ R⁺. Exact while ỹ₁ lies in range(√V), which holds from a zero start.
PrimalDualPoint to_full_coordinates(const SolverState& s, const DenseConsensusFactors& f);

// The H, M and M₁ quadratic forms on differences of primal-dual points. The
// y₁ block needs √V, so these live in dense verification mode.
class MetricOperators {
 public:
  MetricOperators(const ProblemInstance& inst, const StepSizes& steps, const DualPreconditioner& pc,
                  DenseConsensusFactors factors);

  // ‖Δx‖²_{Γ⁻¹} + (1/β)‖Δy₁‖² + Σ Δy₂ᵢᵀ S_i Δy₂ᵢ
  double h_norm_sq(const PrimalDualPoint& d) const;
  // ‖Δx‖²_{Γ⁻¹ − ½L_F} + ‖Δy‖²_{Q − BΓBᵀ}
  double m_norm_sq(const PrimalDualPoint& d) const;
  // ‖Δx‖²_{Γ⁻¹ − L_F} + ‖Δy‖²_{Q − BΓBᵀ}
  double m1_norm_sq(const PrimalDualPoint& d) const;

  // Bᵀy = (√V y₁ + Uᵀ y₂, −y₂)
  std::pair<AgentBlocks, AgentBlocks> b_transpose(const AgentBlocks& y1, const AgentBlocks& y2) const;
  // Bx = (√V x₁, U x₁ − x₂)
  std::pair<AgentBlocks, AgentBlocks> b_apply(const AgentBlocks& x1, const AgentBlocks& x2) const;

  const DenseConsensusFactors& factors() const { return factors_; }
  const StepSizes& steps() const { return steps_; }

 private:
  double primal_part(const PrimalDualPoint& d, double lipschitz_weight) const;
  double dual_q_part(const PrimalDualPoint& d) const;
  double dual_bgb_part(const PrimalDualPoint& d) const;
  static double checked(double value);

  const ProblemInstance* inst_;
  StepSizes steps_;
  const DualPreconditioner* pc_;
  DenseConsensusFactors factors_;
  Vector lipschitz_;
};

// Sampled constants c₁ ≤ c₂ with c₁‖w‖ ≤ ‖w‖_M ≤ ‖w‖_H ≤ c₂‖w‖.
struct MetricBounds {
  double c1 = 0.0;
  double c2 = 0.0;
  double min_m_over_h = 0.0;
};
MetricBounds sample_metric_bounds(const MetricOperators& ops, std::size_t n, std::size_t p, std::size_t m,
                                  std::size_t samples, std::uint64_t seed);

}  // namespace disa
