#include "disa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace disa {

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::budget: return "budget";
    case RunStatus::diverged: return "diverged";
    case RunStatus::completed: return "completed";
  }
  return "unknown";
}

std::vector<double> Trace::column(double TraceRow::*field) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.*field);
  return out;
}

namespace {

void put(std::ostream& out, double v) {
  if (std::isnan(v)) return;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

double field(const std::string& text, std::size_t line) {
  if (text.empty()) return kUnavailable;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw ParseError(line, "trailing characters in '" + text + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(line, "not a number: '" + text + "'");
  }
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.iter << ',';
    put(out, r.re_err);
    out << ',';
    put(out, r.consensus);
    out << ',';
    put(out, r.kkt_norm);
    out << ',';
    put(out, r.objective);
    out << ',';
    put(out, r.h_dist);
    out << ',';
    put(out, r.m_step);
    out << ',';
    put(out, r.eps);
    out << ',';
    put(out, r.ms);
    out << '\n';
  }
}

Trace read_trace_csv(std::istream& in) {
  Trace t;
  std::string line;
  std::size_t number = 0;
  if (!std::getline(in, line)) throw ParseError(0, "missing header");
  ++number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError(number, "unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) throw ParseError(number, "expected 9 fields");
    TraceRow r;
    const double iter = field(cells[0], number);
    if (!(iter >= 0.0)) throw ParseError(number, "missing iteration index");
    r.iter = static_cast<std::size_t>(iter);
    r.re_err = field(cells[1], number);
    r.consensus = field(cells[2], number);
    r.kkt_norm = field(cells[3], number);
    r.objective = field(cells[4], number);
    r.h_dist = field(cells[5], number);
    r.m_step = field(cells[6], number);
    r.eps = field(cells[7], number);
    const double ms = field(cells[8], number);
    r.ms = std::isnan(ms) ? 0.0 : ms;
    t.rows.push_back(r);
  }
  return t;
}

double relative_error(const AgentBlocks& x1, const AgentBlocks& x1_star) {
  if (x1.rows() != x1_star.rows() || x1.cols() != x1_star.cols())
    throw DimensionMismatch("relative_error operands differ in shape");
  const double ref = x1_star.norm();
  if (!(ref > 0.0)) throw ZeroReference("reference solution has zero norm");
  return (x1 - x1_star).norm() / ref;
}

double relative_error(const AgentBlocks& x1, const Vector& x_star) {
  if (x1.rows() != x_star.size()) throw DimensionMismatch("relative_error operands differ in shape");
  return relative_error(x1, AgentBlocks(x_star.replicate(1, x1.cols())));
}

double KktElement::norm() const { return std::sqrt(norm_sq()); }

KktElement kkt_element(const ProblemInstance& inst, const StepSizes& steps, const SolverState& after,
                       const StepRecord& step) {
  const Eigen::Index m = after.x1.cols();
  const bool has_aux = after.x2.rows() > 0;
  KktElement e;
  e.rx1.resize(after.x1.rows(), m);
  e.rx2.resize(after.x2.rows(), m);
  e.ry2.resize(after.x2.rows(), m);
  const AgentBlocks dy1 = after.y1_tilde - step.y1_tilde_prev;
  const AgentBlocks dy2 = after.y2 - step.y2_prev;
  double consensus_form = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const double inv_tau = 1.0 / steps.tau[i];
    const auto& agent = inst.agent(a);
    Vector r = agent.f->gradient(after.xbar1.col(i)) - step.grad_prev.col(i) + dy1.col(i) -
               inv_tau * (after.xbar1.col(i) - step.x1_prev.col(i));
    if (has_aux) r += agent.U.transpose() * dy2.col(i);
    e.rx1.col(i) = r;
    if (has_aux) {
      Vector r2 = -dy2.col(i) - inv_tau * (after.xbar2.col(i) - step.x2_prev.col(i));
      if (step.prox_error.size() > 0) r2 += step.prox_error.col(i);
      e.rx2.col(i) = r2;
      e.ry2.col(i) = -(agent.U * after.xbar1.col(i) - after.xbar2.col(i));
    }
    consensus_form += after.xbar1.col(i).dot(after.xbar1.col(i) - step.mixed_xbar1.col(i));
  }
  e.ry1_norm_sq = std::max(0.0, 0.5 * consensus_form);
  return e;
}

DenseVerifier::DenseVerifier(const ProblemInstance& inst, const MixingMatrix& w, const StepSizes& steps,
                             const DualPreconditioner& pc, PrimalDualPoint w_star)
    : ops_(inst, steps, pc, dense_consensus_factors(w)), w_star_(std::move(w_star)) {}

double DenseVerifier::h_dist(const SolverState& s) const { return ops_.h_norm_sq(full(s) - w_star_); }

double DenseVerifier::m_step(const SolverState& after, const StepRecord& step) const {
  const Matrix& pinv = ops_.factors().pseudo_inverse;
  PrimalDualPoint d{step.x1_prev - after.xbar1, step.x2_prev - after.xbar2,
                    (step.y1_tilde_prev - after.y1_tilde) * pinv, step.y2_prev - after.y2};
  return ops_.m_norm_sq(d);
}

namespace {

std::vector<double> required_series(const Trace& trace, double TraceRow::*f, const char* name) {
  std::vector<double> s = trace.column(f);
  if (s.empty()) throw MissingSeries(std::string("trace has no ") + name + " rows");
  for (double v : s) {
    if (std::isnan(v)) throw MissingSeries(std::string("trace is missing ") + name + " values");
  }
  return s;
}

}  // namespace

FejerReport fejer_check(const Trace& trace, double rel_tol) {
  const std::vector<double> h = required_series(trace, &TraceRow::h_dist, "h_dist");
  const double h0 = std::isnan(trace.meta.h_dist_initial) ? h.front() : trace.meta.h_dist_initial;
  FejerReport r;
  double prev = h0;
  for (double v : h) {
    r.max_increment = std::max(r.max_increment, v - prev);
    prev = v;
  }
  r.pass = r.max_increment <= rel_tol * h0;
  return r;
}

PartialSumReport partial_sum_check(const Trace& trace, double h_dist_initial, double rel_tol) {
  const std::vector<double> ms = required_series(trace, &TraceRow::m_step, "m_step");
  PartialSumReport r;
  double sum = 0.0;
  r.slack = h_dist_initial;
  for (double v : ms) {
    sum += v;
    r.slack = std::min(r.slack, h_dist_initial - sum);
  }
  r.pass = r.slack >= -rel_tol * std::max(h_dist_initial, 1e-300);
  return r;
}

double quasi_fejer_constant(const Trace& trace) {
  const std::vector<double> h = required_series(trace, &TraceRow::h_dist, "h_dist");
  const std::vector<double> eps = required_series(trace, &TraceRow::eps, "eps");
  double prev = std::isnan(trace.meta.h_dist_initial) ? h.front() : trace.meta.h_dist_initial;
  double psi = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double growth = std::sqrt(std::max(h[k], 0.0)) - std::sqrt(std::max(prev, 0.0));
    if (growth > 0.0) psi = std::max(psi, eps[k] > 0.0 ? growth / eps[k] : std::numeric_limits<double>::infinity());
    prev = h[k];
  }
  return psi;
}

double lagrangian(const ProblemInstance& inst, const DenseConsensusFactors& f, const PrimalDualPoint& w) {
  double value = (w.y1.cwiseProduct(w.x1 * f.sqrt_half_laplacian)).sum();
  for (std::size_t i = 0; i < inst.agent_count(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    const auto& a = inst.agent(i);
    value += a.f->value(w.x1.col(c));
    if (inst.map_dim() > 0) {
      value += a.g->value(w.x2.col(c));
      value += w.y2.col(c).dot(a.U * w.x1.col(c) - w.x2.col(c));
    }
  }
  return value;
}

GapReport primal_dual_gap_bound_check(const ProblemInstance& inst, const StepSizes& steps,
                                      const MetricOperators& ops, const PrimalDualPoint& averaged,
                                      const PrimalDualPoint& probe, const PrimalDualPoint& w0, std::size_t k,
                                      double slack) {
  if (!steps.strict) throw StrictRegimeRequired("gap bound needs tau_i < 1/L_i for every agent");
  if (k == 0) throw Error("gap bound needs at least one iteration");
  const PrimalDualPoint primal_avg{averaged.x1, averaged.x2, probe.y1, probe.y2};
  const PrimalDualPoint dual_avg{probe.x1, probe.x2, averaged.y1, averaged.y2};
  GapReport r;
  r.gap = lagrangian(inst, ops.factors(), primal_avg) - lagrangian(inst, ops.factors(), dual_avg);
  r.bound = ops.h_norm_sq(w0 - probe) / (2.0 * static_cast<double>(k));
  r.pass = r.gap <= r.bound + slack;
  return r;
}

LinearFit tail_linear_fit(const std::vector<double>& series, double tail_fraction) {
  if (series.size() < 50) throw TooShort("linear fit needs at least 50 points");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw Error("tail fraction must lie in (0, 1]");
  const auto count = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(series.size()))));
  const std::size_t start = series.size() - count;
  double sx = 0.0, sy = 0.0;
  std::vector<double> ys(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double v = series[start + j];
    if (!(v > 0.0)) throw Error("linear fit needs a positive series");
    ys[j] = std::log(v);
    sx += static_cast<double>(start + j);
    sy += ys[j];
  }
  const double n = static_cast<double>(count);
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    const double dx = static_cast<double>(start + j) - mx;
    const double dy = ys[j] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.rate = std::exp(fit.slope);
  double ss_res = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    const double pred = fit.intercept + fit.slope * static_cast<double>(start + j);
    ss_res += (ys[j] - pred) * (ys[j] - pred);
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("log-log slope needs two matching series");
  double sx = 0.0, sy = 0.0;
  const double n = static_cast<double>(x.size());
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw Error("log-log slope needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (lx[i] - sx / n) * (lx[i] - sx / n);
    sxy += (lx[i] - sx / n) * (ly[i] - sy / n);
  }
  return sxy / sxx;
}

}  // namespace disa
