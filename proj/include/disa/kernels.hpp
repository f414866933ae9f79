#pragma once

#include "disa/network.hpp"
#include "disa/problems.hpp"
#include "disa/solver_core.hpp"

#include <vector>

namespace disa {

enum class Execution { parallel, serial_reference };

// Per-agent oracle and communication counts. Each agent only writes its own
// slot, so parallel loops update them without synchronisation.
struct CallCounters {
  std::vector<std::size_t> gradient_calls;
  std::vector<std::size_t> prox_calls;
  std::size_t gossip_rounds = 0;
  std::size_t iterations = 0;

  explicit CallCounters(std::size_t m = 0) : gradient_calls(m, 0), prox_calls(m, 0) {}
};

struct KernelContext {
  const ProblemInstance* inst;
  const MixingMatrix* w;
  const StepSizes* steps;
  const DualPreconditioner* pc;
};

// The agent-local pieces of one DISA iteration. Two implementations with the
// same arithmetic: an OpenMP agent-parallel one and a plain serial reference.
namespace kernels {

struct Ops {
  // grad.col(i) = ∇f_i(x1.col(i))
  void (*gradients)(const KernelContext&, const AgentBlocks& x1, AgentBlocks& grad, CallCounters&);
  // out.col(i) = x1.col(i) − τ_i(grad + y1_tilde + U_iᵀ y2)
  void (*primal_linear)(const KernelContext&, const AgentBlocks& x1, const AgentBlocks& grad,
                        const AgentBlocks& y1_tilde, const AgentBlocks& y2, AgentBlocks& out);
  // out.col(i) = prox_{τ_i g_i}(x2.col(i) + τ_i y2.col(i))
  void (*prox_step)(const KernelContext&, const AgentBlocks& x2, const AgentBlocks& y2, AgentBlocks& out,
                    CallCounters&);
  // out.col(i) = Σ_j W_ij x.col(j)
  void (*gossip)(const KernelContext&, const AgentBlocks& x, AgentBlocks& out, CallCounters&);
  // ỹ₁ += (β/2)(x̄₁ − mixed), y₂ += S_i⁻¹(U_i x̄₁ − x̄₂)
  void (*dual_update)(const KernelContext&, const AgentBlocks& xbar1, const AgentBlocks& xbar2,
                      const AgentBlocks& mixed, AgentBlocks& y1_tilde, AgentBlocks& y2);
  // x₁ = x̃₁ + τ_i(Δỹ₁ + U_iᵀΔy₂), x₂ = x̃₂ − τ_iΔy₂ with Δ = old − new
  void (*correction)(const KernelContext&, const AgentBlocks& y1_old, const AgentBlocks& y2_old,
                     const AgentBlocks& y1_new, const AgentBlocks& y2_new, AgentBlocks& x1, AgentBlocks& x2);
};

const Ops& parallel_ops();
const Ops& reference_ops();
const Ops& ops_for(Execution e);

}  // namespace kernels
}  // namespace disa
