#pragma once

#include "disa/disa.hpp"

namespace disa {

// min θ₁(x₁) + θ₂(C x₁) with θ₁ = Σf_i, C = [U; √V] and
// θ₂(z₁, z₂) = Σ g_i(z₁ᵢ) + δ₀(z₂). Dense √V, verification scale only.
class ReformulatedProblem {
 public:
  ReformulatedProblem(const ProblemInstance& inst, const MixingMatrix& w);

  const ProblemInstance& instance() const { return *inst_; }
  const MixingMatrix& mixing() const { return *w_; }
  const DenseConsensusFactors& factors() const { return factors_; }
  // Lipschitz constant of ∇θ₁ (max_i L_i; θ₁ is block separable).
  double smooth_lipschitz() const { return lipschitz_; }

  AgentBlocks gradient(const AgentBlocks& x1) const;
  // C x₁ = (U x₁, √V x₁)
  std::pair<AgentBlocks, AgentBlocks> apply_c(const AgentBlocks& x1) const;
  // Cᵀ(z₁, z₂) = Uᵀz₁ + √V z₂
  AgentBlocks apply_c_transpose(const AgentBlocks& z1, const AgentBlocks& z2) const;

  // ‖CᵀC‖ = ‖UᵀU + V‖ by power iteration.
  double c_norm_sq() const;
  // ‖BᵀB‖ for B = [[√V, 0], [U, −I]] by power iteration.
  double b_norm_sq() const;

 private:
  const ProblemInstance* inst_;
  const MixingMatrix* w_;
  DenseConsensusFactors factors_;
  double lipschitz_;
};

// Fires once ‖x − x*‖ exceeds 10⁶·‖x⁰ − x*‖ or an iterate is non-finite, and
// stays fired.
class DivergenceIndicator {
 public:
  DivergenceIndicator(double initial_distance, double factor = 1e6);
  bool update(double distance);
  bool fired() const { return fired_; }

 private:
  double threshold_;
  bool fired_ = false;
};

struct BaselineSteps {
  double tau = 0.0;
  double beta = 0.0;
};

enum class BaselinePolicy {
  fig4,      // τ = min_i 1/L_i − 1e-4, τβ = 0.01
  table3,    // τ = (1 − 1e-4)·min_i 1/(L_i/2 + β‖operator‖), β given
  logistic,  // τ = 0.25, β = 0.01
};

BaselinePolicy parse_baseline_policy(const std::string& name);

// `operator_norm_sq` is ‖UᵀU + V‖ for Condat-Vu and ‖BᵀB‖ for L-ALM.
BaselineSteps baseline_step_sizes(const Vector& lipschitz, BaselinePolicy policy, double operator_norm_sq,
                                  double beta = 0.01);

// τβ‖operator‖ + τL/2 < 1
bool baseline_condition_holds(const BaselineSteps& s, double operator_norm_sq, double lipschitz);

class CondatVu {
 public:
  CondatVu(const ReformulatedProblem& rp, BaselineSteps steps);

  // x₁ plus duals z₁ (p×m, paired with U x₁) and z₂ (n×m, paired with √V x₁).
  void set_state(AgentBlocks x1, AgentBlocks z1, AgentBlocks z2);
  void iterate();

  const AgentBlocks& x1() const { return x1_; }
  const AgentBlocks& z1() const { return z1_; }
  const AgentBlocks& z2() const { return z2_; }
  bool finite() const { return x1_.allFinite() && z1_.allFinite() && z2_.allFinite(); }

 private:
  const ReformulatedProblem* rp_;
  BaselineSteps steps_;
  AgentBlocks x1_, z1_, z2_;
};

class LinearizedAlm {
 public:
  LinearizedAlm(const ReformulatedProblem& rp, BaselineSteps steps);

  void set_state(PrimalDualPoint w);
  void iterate();

  const PrimalDualPoint& point() const { return w_; }
  bool finite() const { return w_.x1.allFinite() && w_.x2.allFinite() && w_.y1.allFinite() && w_.y2.allFinite(); }

 private:
  std::pair<AgentBlocks, AgentBlocks> apply_b(const AgentBlocks& x1, const AgentBlocks& x2) const;
  std::pair<AgentBlocks, AgentBlocks> apply_b_transpose(const AgentBlocks& y1, const AgentBlocks& y2) const;

  const ReformulatedProblem* rp_;
  BaselineSteps steps_;
  PrimalDualPoint w_;
};

// x^{k+1} = W̃(2x^k − x^{k−1} + τ∇F(x^{k−1}) − τ∇F(x^k)), W̃ = (I+W)/2, with
// x¹ = W̃(x⁰ − τ∇F(x⁰)). Requires g ≡ 0.
class NidsRecursion {
 public:
  NidsRecursion(const ProblemInstance& inst, const MixingMatrix& w, double tau);

  void set_state(AgentBlocks x0);
  void iterate();
  const AgentBlocks& x() const { return x_; }

 private:
  AgentBlocks gradient(const AgentBlocks& x) const;
  AgentBlocks half_mix(const AgentBlocks& v) const;

  const ProblemInstance* inst_;
  const MixingMatrix* w_;
  double tau_;
  AgentBlocks x_, x_prev_, grad_, grad_prev_;
  bool started_ = false;
};

// Baseline runs share the Trace schema; kkt_norm stays empty and the KKT
// stopping rule is rejected. With a reference point, the divergence indicator
// ends the run with status diverged.
Trace condat_vu_run(const ReformulatedProblem& rp, BaselineSteps steps, const RunOptions& opts);
Trace lalm_run(const ReformulatedProblem& rp, BaselineSteps steps, const RunOptions& opts);
Trace nids_reference_run(const ProblemInstance& inst, const MixingMatrix& w, double tau, const RunOptions& opts);

}  // namespace disa
