#pragma once

#include "disa/common.hpp"
#include "disa/network.hpp"
#include "disa/problems.hpp"
#include "disa/solver_core.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace disa {

inline constexpr double kUnavailable = std::numeric_limits<double>::quiet_NaN();

// One row per completed iteration. NaN marks a series the run does not
// produce; it is written as an empty CSV field.
struct TraceRow {
  std::size_t iter = 0;
  double re_err = kUnavailable;
  double consensus = kUnavailable;
  double kkt_norm = kUnavailable;
  double objective = kUnavailable;
  double h_dist = kUnavailable;  // ‖w^k − w*‖²_H
  double m_step = kUnavailable;  // ‖w^{k−1} − v^k‖²_M
  double eps = kUnavailable;
  double ms = 0.0;               // cumulative solver wallclock
  double prox_error = kUnavailable;  // max_i ‖d_i‖, in memory only
};

enum class RunStatus { converged, budget, diverged, completed };

std::string to_string(RunStatus s);

struct TraceMetadata {
  std::string solver;
  std::string config_hash;
  std::uint64_t seed = 0;
  double h_dist_initial = kUnavailable;  // ‖w^0 − w*‖²_H
};

struct Trace {
  TraceMetadata meta;
  std::vector<TraceRow> rows;
  RunStatus status = RunStatus::completed;

  bool empty() const { return rows.empty(); }
  std::size_t iterations() const { return rows.empty() ? 0 : rows.back().iter; }
  std::vector<double> column(double TraceRow::*field) const;
};

class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(Trace partial)
      : Error("iteration budget exhausted after " + std::to_string(partial.iterations()) + " iterations"),
        trace_(std::move(partial)) {}
  const Trace& trace() const { return trace_; }

 private:
  Trace trace_;
};

class EmptyTrace : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kTraceHeader = "iter,re_err,consensus,kkt_norm,objective,h_dist,m_step,eps,ms";

void write_trace_csv(std::ostream& out, const Trace& trace);
Trace read_trace_csv(std::istream& in);

// ‖x1 − x1*‖ / ‖x1*‖ on stacked blocks.
double relative_error(const AgentBlocks& x1, const AgentBlocks& x1_star);
// Same with x1* = 1 ⊗ x*.
double relative_error(const AgentBlocks& x1, const Vector& x_star);

// The element (r_x, r_y) of T(v^{k+1}) built from one iteration. The y₁ part
// of r_y is −√V x̄₁; only its squared norm ½x̄₁ᵀ(I−W)x̄₁ is needed, so it is
// kept as a scalar and √V is never formed.
struct KktElement {
  AgentBlocks rx1;
  AgentBlocks rx2;
  double ry1_norm_sq = 0.0;
  AgentBlocks ry2;

  double norm_sq() const { return rx1.squaredNorm() + rx2.squaredNorm() + ry1_norm_sq + ry2.squaredNorm(); }
  double norm() const;
};

// `after` holds x̄ (or x̃) and y^{k+1}; `step` holds w^k and ∇F(x^k).
KktElement kkt_element(const ProblemInstance& inst, const StepSizes& steps, const SolverState& after,
                       const StepRecord& step);

// H/M distances against a known saddle point; small instances only.
class DenseVerifier {
 public:
  DenseVerifier(const ProblemInstance& inst, const MixingMatrix& w, const StepSizes& steps,
                const DualPreconditioner& pc, PrimalDualPoint w_star);

  double h_dist(const SolverState& s) const;
  // ‖w^k − v^{k+1}‖²_M with w^k from the record and v^{k+1} = (x̄, y^{k+1}).
  double m_step(const SolverState& after, const StepRecord& step) const;

  const MetricOperators& metric() const { return ops_; }
  const PrimalDualPoint& saddle_point() const { return w_star_; }
  PrimalDualPoint full(const SolverState& s) const { return to_full_coordinates(s, ops_.factors()); }

 private:
  MetricOperators ops_;
  PrimalDualPoint w_star_;
};

struct FejerReport {
  double max_increment = 0.0;
  bool pass = false;
};
// Largest h_dist(k+1) − h_dist(k); passes when it is at most 1e-9·h_dist(0).
FejerReport fejer_check(const Trace& trace, double rel_tol = 1e-9);

struct PartialSumReport {
  double slack = 0.0;  // min over K of h0 − Σ_{k<K} m_step
  bool pass = false;
};
PartialSumReport partial_sum_check(const Trace& trace, double h_dist_initial, double rel_tol = 1e-9);

// max_k (‖w^{k+1} − w*‖_H − ‖w^k − w*‖_H) / ε^k, or 0 when distances never grow.
double quasi_fejer_constant(const Trace& trace);

// L(x, y) = Σ f_i(x1_i) + Σ g_i(x2_i) + ⟨y1, √V x1⟩ + ⟨y2, U x1 − x2⟩.
double lagrangian(const ProblemInstance& inst, const DenseConsensusFactors& f, const PrimalDualPoint& w);

struct GapReport {
  double gap = 0.0;
  double bound = 0.0;
  bool pass = false;
};
// L(X^K, y) − L(x, Y^K) ≤ ‖w⁰ − w‖²_H / (2K) + 1e-8 at the probe w = (x, y).
GapReport primal_dual_gap_bound_check(const ProblemInstance& inst, const StepSizes& steps,
                                      const MetricOperators& ops, const PrimalDualPoint& averaged,
                                      const PrimalDualPoint& probe, const PrimalDualPoint& w0, std::size_t k,
                                      double slack = 1e-8);

struct LinearFit {
  double rate = 0.0;       // exp(slope)
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
// Least-squares fit of log(series) against the index over the final
// tail_fraction of a positive series of length ≥ 50.
LinearFit tail_linear_fit(const std::vector<double>& series, double tail_fraction = 0.3);

// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace disa
