#pragma once

#include "disa/common.hpp"
#include "disa/kernels.hpp"
#include "disa/metrics.hpp"
#include "disa/network.hpp"
#include "disa/problems.hpp"
#include "disa/solver_core.hpp"

#include <functional>
#include <optional>
#include <string>

namespace disa {

struct StoppingRule {
  enum class Kind { relative_error, kkt, max_iters };
  Kind kind = Kind::relative_error;
  double tol = 1e-7;
  std::size_t max_iters = 50000;

  static Kind parse_kind(const std::string& name);
  static std::string kind_name(Kind k);
};

struct RunOptions {
  StoppingRule stop;
  std::optional<Vector> x_star;             // needed by the relative-error rule and re_err column
  const DenseVerifier* verifier = nullptr;  // fills h_dist and m_step when set
  std::string solver_name = "disa";
  std::uint64_t seed = 0;
  std::string config_hash;
};

// State and bookkeeping shared by the exact and approximate-prox engines. The
// instance and mixing matrix are borrowed and must outlive the engine.
class EngineBase {
 public:
  EngineBase(const ProblemInstance& inst, const MixingMatrix& w, StepSizes steps,
             Execution exec = Execution::parallel);

  const ProblemInstance& instance() const { return *inst_; }
  const MixingMatrix& mixing() const { return *w_; }
  const StepSizes& steps() const { return steps_; }
  const DualPreconditioner& preconditioner() const { return pc_; }
  const SolverState& state() const { return state_; }
  const StepRecord& last_step() const { return record_; }
  const CallCounters& counters() const { return counters_; }
  Execution execution() const { return exec_; }

  // Replaces the iterate; counters and the step record are reset.
  void set_state(SolverState s);

 protected:
  KernelContext context() const { return {inst_, w_, &steps_, &pc_}; }
  void snapshot();

  const ProblemInstance* inst_;
  const MixingMatrix* w_;
  StepSizes steps_;
  DualPreconditioner pc_;
  Execution exec_;
  SolverState state_;
  StepRecord record_;
  CallCounters counters_;
  AgentBlocks grad_;
};

// Per-agent DISA: half step, one gossip round on x̄₁, dual step, primal step.
class DisaEngine : public EngineBase {
 public:
  using EngineBase::EngineBase;
  void iterate();
};

void disa_iterate(DisaEngine& engine);

// Diagnostics for the engine's latest iteration.
TraceRow diagnostic_row(const EngineBase& engine, const RunOptions& opts);

// Shared driver: advance, check for non-finite iterates, record a row (which
// `annotate` may extend), test the stopping rule.
Trace run_engine(EngineBase& engine, const RunOptions& opts, const std::function<void()>& advance,
                 const std::function<void(TraceRow&)>& annotate = {});

// Runs until the stopping rule fires. Hitting max_iters under the
// relative-error or KKT rule throws BudgetExceeded with the partial trace;
// non-finite iterates end the run with status diverged.
Trace disa_run(DisaEngine& engine, const RunOptions& opts);

// Dense compact iteration with explicit √V, B and Q; verification only.
class CompactDisa {
 public:
  CompactDisa(const ProblemInstance& inst, const MixingMatrix& w, const StepSizes& steps);

  void set_point(const PrimalDualPoint& w);
  void iterate();

  PrimalDualPoint point() const;
  AgentBlocks y1_tilde() const;
  const Matrix& b() const { return b_; }
  const Matrix& q() const { return q_; }

 private:
  Vector prox_g(const Vector& v) const;
  Vector gradient(const Vector& x) const;

  const ProblemInstance* inst_;
  StepSizes steps_;
  std::size_t n_, p_, m_;
  Matrix b_, q_;
  Eigen::LLT<Matrix> q_factor_;
  Vector gamma_;
  Vector x_, y_;
};

struct ReferenceSolution {
  Vector x_star;
  double objective_star = 0.0;
  double certificate = 0.0;  // KKT element norm at the final iterate
  double scale = 1.0;        // certificate target is tol·scale
  std::size_t iterations = 0;
  SolverState state;
  StepSizes steps;
};

// Runs DISA with τ_i = 1/L_i, τβ = ½ until the KKT element norm drops below
// tol·max(1, max_i ‖∇f_i(0)‖).
ReferenceSolution reference_solution(const ProblemInstance& inst, const MixingMatrix& w, double tol = 1e-12,
                                     std::size_t max_iters = 2000000);

}  // namespace disa
