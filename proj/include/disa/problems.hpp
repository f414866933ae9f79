#pragma once

#include "disa/common.hpp"
#include "disa/prox.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace disa {

// Smooth convex f_i with L-Lipschitz gradient.
class SmoothLoss {
 public:
  virtual ~SmoothLoss() = default;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual double lipschitz() const = 0;
  virtual std::size_t dim() const = 0;
};

using LossPtr = std::shared_ptr<const SmoothLoss>;

// ½‖Qx − q‖²; the Gram matrix is cached for gradients.
class LeastSquaresLoss final : public SmoothLoss {
 public:
  LeastSquaresLoss(Matrix q_matrix, Vector q_vector);
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double lipschitz() const override { return lipschitz_; }
  std::size_t dim() const override { return static_cast<std::size_t>(design_.cols()); }

 private:
  Matrix design_;
  Vector target_;
  Matrix gram_;
  Vector design_t_target_;
  double lipschitz_;
};

// (1/s) Σ_j log(1 + exp(−b_j⟨a_j, x⟩)) + (ridge/2)‖x‖² over s samples.
class LogisticRidgeLoss final : public SmoothLoss {
 public:
  LogisticRidgeLoss(Matrix features, Vector labels, double ridge = 1.0);
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double lipschitz() const override { return lipschitz_; }
  std::size_t dim() const override { return static_cast<std::size_t>(features_.cols()); }

 private:
  Matrix features_;
  Vector labels_;
  double ridge_;
  double lipschitz_;
};

// One agent's share of Σ_i f_i(x) + g_i(U_i x). U may have zero rows, in which
// case the agent carries no auxiliary block and g is unused.
struct AgentProblem {
  LossPtr f;
  ProxPtr g;
  Matrix U;

  double lipschitz() const { return f->lipschitz(); }
};

struct InstanceMetadata {
  std::string name;
  std::uint64_t seed = 0;
  double u_scale = 1.0;
};

class ProblemInstance {
 public:
  ProblemInstance(std::vector<AgentProblem> agents, InstanceMetadata meta);

  std::size_t agent_count() const { return agents_.size(); }
  std::size_t primal_dim() const { return n_; }
  std::size_t map_dim() const { return p_; }
  const AgentProblem& agent(std::size_t i) const { return agents_[i]; }
  const std::vector<AgentProblem>& agents() const { return agents_; }
  const InstanceMetadata& metadata() const { return meta_; }

  Vector lipschitz_constants() const;
  // Σ_i f_i(x) + g_i(U_i x) at a common point.
  double objective(const Vector& x) const;
  // Σ_i f_i(x1_i) + g_i(U_i x1_i), agent-local evaluation on stacked copies.
  double objective(const AgentBlocks& x1) const;
  // max_i ‖U_i U_iᵀ‖.
  double max_map_norm_sq() const;

 private:
  std::vector<AgentProblem> agents_;
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  InstanceMetadata meta_;
};

// Largest eigenvalue of a symmetric PSD operator by power iteration.
double power_iteration(const std::function<Vector(const Vector&)>& apply, std::size_t dim,
                       std::size_t max_iters = 200000, double rel_tol = 1e-15);

// ‖MᵀM‖ by power iteration.
double lipschitz_estimate(const Matrix& m);

// Entries of U_i are 0.1·N(0,1) before u_scale is applied; Q_i, q_i are N(0,1).
inline constexpr double kLassoMapBaseScale = 0.1;

ProblemInstance make_generalized_lasso(std::size_t m, std::size_t n, std::uint64_t seed, double u_scale = 1.0,
                                       std::size_t u_rows = 20);

struct LabeledData {
  Matrix features;  // one sample per row
  Vector labels;    // ±1
};

ProblemInstance make_distributed_logistic(const std::vector<LabeledData>& per_agent, std::size_t u_rows,
                                          std::uint64_t seed, double u_scale = 1.0);

// Shuffle samples with the seed and deal them out as evenly as possible.
std::vector<LabeledData> split_samples(const LabeledData& data, std::size_t m, std::uint64_t seed);

// Two Gaussian clusters: labels ±1 with equal probability, features
// label·μ + N(0, I) where μ = (separation/√n)·1, so ‖μ‖ = separation.
LabeledData make_synthetic_classification(std::size_t samples, std::size_t n, std::uint64_t seed,
                                          double separation = 3.0);

// "label idx:val idx:val ..." with 1-based indices; labels 0 map to −1.
LabeledData parse_libsvm(std::istream& in);
void write_libsvm(std::ostream& out, const LabeledData& data);

}  // namespace disa
