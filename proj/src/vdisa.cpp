#include "disa/vdisa.hpp"

#include "first_exception.hpp"

#include <cmath>
#include <random>
#include <regex>
#include <sstream>

namespace disa {

EpsilonSchedule EpsilonSchedule::zero() { return EpsilonSchedule{}; }

EpsilonSchedule EpsilonSchedule::power(double eps0, double r, bool unsafe) {
  if (!(eps0 > 0.0)) throw ConfigError("power schedule needs eps0 > 0");
  if (!(r > 1.0) && !unsafe) throw ConfigError("power schedule needs r > 1 for a summable error sequence");
  if (!(r > 0.0)) throw ConfigError("power schedule needs r > 0");
  EpsilonSchedule s;
  s.kind_ = Kind::power;
  s.eps0_ = eps0;
  s.rate_ = r;
  return s;
}

EpsilonSchedule EpsilonSchedule::geometric(double r) {
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("geometric schedule needs 0 < r < 1");
  EpsilonSchedule s;
  s.kind_ = Kind::geometric;
  s.eps0_ = 1.0;
  s.rate_ = r;
  return s;
}

EpsilonSchedule EpsilonSchedule::parse(const std::string& text) {
  static const std::regex power_re(R"(\s*power\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)\s*)");
  static const std::regex geo_re(R"(\s*geometric\(\s*([^)\s]+)\s*\)\s*)");
  std::smatch mt;
  try {
    if (text == "zero" || text == "exact") return zero();
    if (std::regex_match(text, mt, power_re)) return power(std::stod(mt[1]), std::stod(mt[2]));
    if (std::regex_match(text, mt, geo_re)) return geometric(std::stod(mt[1]));
  } catch (const std::logic_error&) {
    throw ConfigError("malformed schedule '" + text + "'");
  }
  throw ConfigError("unknown schedule '" + text + "'");
}

double EpsilonSchedule::at(std::size_t k) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::power: return eps0_ / std::pow(static_cast<double>(k) + 1.0, rate_);
    case Kind::geometric: return std::pow(rate_, static_cast<double>(k));
  }
  return 0.0;
}

bool EpsilonSchedule::summable() const { return kind_ != Kind::power || rate_ > 1.0; }

std::string EpsilonSchedule::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::zero: os << "zero"; break;
    case Kind::power: os << "power(" << eps0_ << "," << rate_ << ")"; break;
    case Kind::geometric: os << "geometric(" << rate_ << ")"; break;
  }
  return os.str();
}

InexactProxStrategy InexactProxStrategy::parse(const std::string& text) {
  InexactProxStrategy s;
  if (text == "exact") s.kind = Kind::exact;
  else if (text == "injected") s.kind = Kind::injected;
  else if (text == "adversarial") s.kind = Kind::adversarial;
  else if (text == "iterative") s.kind = Kind::iterative;
  else throw ConfigError("unknown inexact prox strategy '" + text + "'");
  return s;
}

std::string InexactProxStrategy::to_string() const {
  switch (kind) {
    case Kind::exact: return "exact";
    case Kind::injected: return "injected";
    case Kind::adversarial: return "adversarial";
    case Kind::iterative: return "iterative";
  }
  return "unknown";
}

namespace {

ProxCertificate iterative_prox(const ProxOperator& g, const Vector& u, double tau, double eps) {
  // Proximal gradient on (1/2τ)‖x − u‖² + g(x) with step τ/2. Each step's
  // optimality condition yields d = (x_t − x_{t+1})/τ in the required set.
  const double inner_step = 0.5 * tau;
  const std::size_t cap = 10 * static_cast<std::size_t>(std::max<Eigen::Index>(u.size(), 1));
  Vector x = u;
  for (std::size_t t = 0; t < cap; ++t) {
    Vector next = g.prox(0.5 * x + 0.5 * u, inner_step);
    Vector d = (x - next) / tau;
    const double bound = d.norm();
    if (bound <= eps) return {std::move(next), bound, std::move(d)};
    x = std::move(next);
  }
  throw InnerSolverStall("inner prox solver did not reach the requested accuracy");
}

}  // namespace

ProxCertificate approximate_prox(const ProxOperator& g, const Vector& u, double tau, double eps,
                                 InexactProxStrategy::Kind kind, const Vector& direction) {
  if (!(eps >= 0.0)) throw Error("inexactness tolerance must be nonnegative");
  if (!(tau > 0.0)) throw Error("prox step must be positive");
  if (eps == 0.0 || kind == InexactProxStrategy::Kind::exact) {
    return {g.prox(u, tau), 0.0, Vector::Zero(u.size())};
  }
  switch (kind) {
    case InexactProxStrategy::Kind::injected:
    case InexactProxStrategy::Kind::adversarial: {
      if (direction.size() != u.size()) throw DimensionMismatch("perturbation direction has the wrong length");
      const double len = direction.norm();
      Vector d = len > 0.0 ? Vector(direction * (eps / len)) : Vector(Vector::Zero(u.size()));
      return {g.prox(u + tau * d, tau), d.norm(), d};
    }
    case InexactProxStrategy::Kind::iterative:
      return iterative_prox(g, u, tau, eps);
    case InexactProxStrategy::Kind::exact:
      break;
  }
  return {g.prox(u, tau), 0.0, Vector::Zero(u.size())};
}

VdisaEngine::VdisaEngine(const ProblemInstance& inst, const MixingMatrix& w, StepSizes steps,
                         EpsilonSchedule schedule, InexactProxStrategy strategy, Execution exec)
    : EngineBase(inst, w, std::move(steps), exec), schedule_(schedule), strategy_(strategy) {}

Vector VdisaEngine::perturbation_direction(std::size_t agent, std::size_t k) const {
  const auto p = static_cast<Eigen::Index>(inst_->map_dim());
  if (strategy_.kind == InexactProxStrategy::Kind::adversarial) {
    const auto y = state_.y2.col(static_cast<Eigen::Index>(agent));
    if (y.norm() > 0.0) return -y;
    return Vector::Unit(p, 0);
  }
  if (strategy_.kind != InexactProxStrategy::Kind::injected) return Vector();
  std::seed_seq seq{static_cast<std::uint32_t>(strategy_.seed), static_cast<std::uint32_t>(strategy_.seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(agent)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  Vector v(p);
  for (Eigen::Index j = 0; j < p; ++j) v[j] = normal(rng);
  return v;
}

void VdisaEngine::iterate() {
  const auto& ops = kernels::ops_for(exec_);
  const KernelContext ctx = context();
  const std::size_t k = counters_.iterations;
  last_eps_ = schedule_.at(k);
  snapshot();
  ops.gradients(ctx, record_.x1_prev, grad_, counters_);
  ops.primal_linear(ctx, record_.x1_prev, grad_, record_.y1_tilde_prev, record_.y2_prev, state_.xbar1);

  const auto p = static_cast<Eigen::Index>(inst_->map_dim());
  const auto m = static_cast<Eigen::Index>(inst_->agent_count());
  state_.xbar2.resize(p, m);
  record_.prox_error.resize(p, m);
  if (p > 0) {
    detail::FirstException error;
#pragma omp parallel for schedule(static) if (exec_ == Execution::parallel)
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto a = static_cast<std::size_t>(i);
      const double tau = steps_.tau[i];
      const Vector u = record_.x2_prev.col(i) + tau * record_.y2_prev.col(i);
      error.capture([&] {
        ProxCertificate cert =
            approximate_prox(*inst_->agent(a).g, u, tau, last_eps_, strategy_.kind, perturbation_direction(a, k));
        state_.xbar2.col(i) = cert.point;
        record_.prox_error.col(i) = cert.witness;
      });
      ++counters_.prox_calls[a];
    }
    error.rethrow();
  }

  ops.gossip(ctx, state_.xbar1, record_.mixed_xbar1, counters_);
  ops.dual_update(ctx, state_.xbar1, state_.xbar2, record_.mixed_xbar1, state_.y1_tilde, state_.y2);
  state_.x1 = state_.xbar1;
  state_.x2 = state_.xbar2;
  ops.correction(ctx, record_.y1_tilde_prev, record_.y2_prev, state_.y1_tilde, state_.y2, state_.x1, state_.x2);
  record_.grad_prev = grad_;
  ++counters_.iterations;
}

void vdisa_iterate(VdisaEngine& engine) { engine.iterate(); }

Trace vdisa_run(VdisaEngine& engine, const RunOptions& opts) {
  return run_engine(
      engine, opts, [&engine] { engine.iterate(); },
      [&engine](TraceRow& row) {
        row.eps = engine.last_epsilon();
        const AgentBlocks& d = engine.last_step().prox_error;
        row.prox_error = d.size() > 0 ? d.colwise().norm().maxCoeff() : 0.0;
      });
}

}  // namespace disa
