#include "disa/prox.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace disa {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void require_positive(double lambda, const char* what) {
  if (!(lambda > 0.0)) throw Error(std::string(what) + ": weight must be positive");
}

// Threshold θ ≥ 0 such that Σ max(|v_j| − θ, 0) = radius, assuming ‖v‖₁ > radius.
double l1_threshold(const Vector& v, double radius) {
  std::vector<double> u(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) u[j] = std::abs(v(j));
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return std::max(theta, 0.0);
}

// Projection onto the scaled simplex {s ≥ 0, Σ s = radius}.
Vector project_simplex(const Vector& v, double radius) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0).matrix();
}

double l1_subgradient_distance(const Vector& x, const Vector& z, double weight) {
  double sq = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double r = x(j) != 0.0 ? z(j) - weight * sign(x(j)) : std::max(std::abs(z(j)) - weight, 0.0);
    sq += r * r;
  }
  return std::sqrt(sq);
}

class ZeroProx final : public ProxOperator {
 public:
  std::string name() const override { return "zero"; }
  double value(const Vector&) const override { return 0.0; }
  Vector prox(const Vector& v, double) const override { return v; }
  bool has_witness() const override { return true; }
  double subgradient_distance(const Vector&, const Vector& z) const override { return z.norm(); }
};

class L1Prox final : public ProxOperator {
 public:
  explicit L1Prox(double weight) : weight_(weight) { require_positive(weight, "l1"); }
  std::string name() const override { return "l1"; }
  double value(const Vector& x) const override { return weight_ * x.lpNorm<1>(); }
  Vector prox(const Vector& v, double t) const override { return prox_l1(v, t * weight_); }
  bool has_witness() const override { return true; }
  double subgradient_distance(const Vector& x, const Vector& z) const override {
    return l1_subgradient_distance(x, z, weight_);
  }

 private:
  double weight_;
};

class EuclideanNormProx final : public ProxOperator {
 public:
  explicit EuclideanNormProx(double weight) : weight_(weight) { require_positive(weight, "euclidean norm"); }
  std::string name() const override { return "l2norm"; }
  double value(const Vector& x) const override { return weight_ * x.norm(); }
  Vector prox(const Vector& v, double t) const override { return prox_euclidean_norm(v, t * weight_); }
  bool has_witness() const override { return true; }
  double subgradient_distance(const Vector& x, const Vector& z) const override {
    const double nx = x.norm();
    if (nx > 0.0) return (z - (weight_ / nx) * x).norm();
    return std::max(z.norm() - weight_, 0.0);
  }

 private:
  double weight_;
};

class LinfProx final : public ProxOperator {
 public:
  explicit LinfProx(double weight) : weight_(weight) { require_positive(weight, "linf"); }
  std::string name() const override { return "linf"; }
  double value(const Vector& x) const override {
    return x.size() == 0 ? 0.0 : weight_ * x.lpNorm<Eigen::Infinity>();
  }
  Vector prox(const Vector& v, double t) const override { return prox_linf(v, t * weight_); }
  bool has_witness() const override { return true; }
  double subgradient_distance(const Vector& x, const Vector& z) const override {
    const double top = x.size() == 0 ? 0.0 : x.lpNorm<Eigen::Infinity>();
    if (top == 0.0) return (z - project_l1_ball(z, weight_)).norm();
    // ∂ = weight · conv{sign(x_j) e_j : |x_j| = ‖x‖∞}.
    double sq = 0.0;
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (std::abs(x(j)) >= top * (1.0 - 1e-12))
        active.push_back(j);
      else
        sq += z(j) * z(j);
    }
    Vector oriented(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) oriented(a) = sign(x(active[a])) * z(active[a]);
    sq += (oriented - project_simplex(oriented, weight_)).squaredNorm();
    return std::sqrt(sq);
  }

 private:
  double weight_;
};

class ElasticNetProx final : public ProxOperator {
 public:
  ElasticNetProx(double l1, double l2) : l1_(l1), l2_(l2) {
    if (l1 < 0.0 || l2 < 0.0 || !(l1 + l2 > 0.0)) throw Error("elastic net: weights must be nonnegative, not both zero");
  }
  std::string name() const override { return "elastic_net"; }
  double value(const Vector& x) const override { return l1_ * x.lpNorm<1>() + l2_ * x.squaredNorm(); }
  Vector prox(const Vector& v, double t) const override { return prox_elastic_net(v, t * l1_, t * l2_); }
  bool has_witness() const override { return true; }
  double subgradient_distance(const Vector& x, const Vector& z) const override {
    return l1_subgradient_distance(x, z - 2.0 * l2_ * x, l1_);
  }

 private:
  double l1_, l2_;
};

class HingeProx final : public ProxOperator {
 public:
  explicit HingeProx(double weight) : weight_(weight) { require_positive(weight, "hinge"); }
  std::string name() const override { return "hinge"; }
  double value(const Vector& x) const override {
    return weight_ * (1.0 - x.array()).max(0.0).sum();
  }
  Vector prox(const Vector& v, double t) const override { return prox_hinge(v, t * weight_); }
  bool has_witness() const override { return true; }
  double subgradient_distance(const Vector& x, const Vector& z) const override {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      double r;
      if (x(j) < 1.0)
        r = z(j) + weight_;
      else if (x(j) > 1.0)
        r = z(j);
      else
        r = z(j) - std::clamp(z(j), -weight_, 0.0);
      sq += r * r;
    }
    return std::sqrt(sq);
  }

 private:
  double weight_;
};

class BoxUpperProx final : public ProxOperator {
 public:
  explicit BoxUpperProx(Vector upper) : upper_(std::move(upper)) {}
  std::string name() const override { return "box_upper"; }
  double value(const Vector& x) const override {
    if (x.size() != upper_.size()) throw DimensionMismatch("box_upper: dimension mismatch");
    return (x.array() <= upper_.array()).all() ? 0.0 : kInf;
  }
  Vector prox(const Vector& v, double) const override { return prox_box_upper(v, upper_); }
  bool has_witness() const override { return true; }
  double subgradient_distance(const Vector& x, const Vector& z) const override {
    if (x.size() != upper_.size()) throw DimensionMismatch("box_upper: dimension mismatch");
    double sq = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (x(j) > upper_(j)) return kInf;
      // Normal cone: {0} strictly inside, [0, ∞) on the bound.
      double r = x(j) < upper_(j) ? z(j) : std::min(z(j), 0.0);
      sq += r * r;
    }
    return std::sqrt(sq);
  }

 private:
  Vector upper_;
};

}  // namespace

Vector prox_l1(const Vector& v, double lambda) {
  require_positive(lambda, "prox_l1");
  return v.unaryExpr([lambda](double a) { return sign(a) * std::max(std::abs(a) - lambda, 0.0); });
}

Vector prox_euclidean_norm(const Vector& v, double lambda) {
  require_positive(lambda, "prox_euclidean_norm");
  const double nv = v.norm();
  return (1.0 - lambda / std::max(nv, lambda)) * v;
}

Vector project_l1_ball(const Vector& v, double radius) {
  if (radius < 0.0) throw Error("project_l1_ball: negative radius");
  if (v.lpNorm<1>() <= radius) return v;
  const double theta = l1_threshold(v, radius);
  return v.unaryExpr([theta](double a) { return sign(a) * std::max(std::abs(a) - theta, 0.0); });
}

Vector prox_linf(const Vector& v, double lambda) {
  require_positive(lambda, "prox_linf");
  if (v.lpNorm<1>() <= lambda) return Vector::Zero(v.size());
  // v − λ·Π_{B₁}(v/λ) = v − Π_{λB₁}(v), i.e. a clamp of |v| at the ball threshold.
  const double theta = l1_threshold(v, lambda);
  return v.unaryExpr([theta](double a) { return sign(a) * std::min(std::abs(a), theta); });
}

Vector prox_elastic_net(const Vector& v, double lambda1, double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0 || !(lambda1 + lambda2 > 0.0))
    throw Error("prox_elastic_net: weights must be nonnegative, not both zero");
  Vector shrunk = lambda1 > 0.0 ? prox_l1(v, lambda1) : v;
  return shrunk / (1.0 + 2.0 * lambda2);
}

Vector prox_hinge(const Vector& v, double lambda) {
  require_positive(lambda, "prox_hinge");
  return v.unaryExpr([lambda](double a) {
    if (a >= 1.0) return a;
    if (a <= 1.0 - lambda) return a + lambda;
    return 1.0;
  });
}

Vector prox_box_upper(const Vector& v, const Vector& upper) {
  if (v.size() != upper.size()) throw DimensionMismatch("prox_box_upper: dimension mismatch");
  return v.cwiseMin(upper);
}

double ProxOperator::subgradient_distance(const Vector&, const Vector&) const {
  throw UnsupportedWitness(name() + " does not describe its subdifferential");
}

ProxPtr make_zero_prox() { return std::make_shared<ZeroProx>(); }
ProxPtr make_l1_prox(double weight) { return std::make_shared<L1Prox>(weight); }
ProxPtr make_euclidean_norm_prox(double weight) { return std::make_shared<EuclideanNormProx>(weight); }
ProxPtr make_linf_prox(double weight) { return std::make_shared<LinfProx>(weight); }
ProxPtr make_elastic_net_prox(double l1_weight, double l2_weight) {
  return std::make_shared<ElasticNetProx>(l1_weight, l2_weight);
}
ProxPtr make_hinge_prox(double weight) { return std::make_shared<HingeProx>(weight); }
ProxPtr make_box_upper_prox(Vector upper) { return std::make_shared<BoxUpperProx>(std::move(upper)); }

Vector moreau_conjugate_prox(const ProxOperator& g, const Vector& v, double beta) {
  if (!(beta > 0.0)) throw Error("moreau_conjugate_prox: beta must be positive");
  return v - beta * g.prox(v / beta, 1.0 / beta);
}

double check_prox_optimality(const ProxOperator& g, const Vector& x, double tau, const Vector& p,
                             const Vector& y_shift) {
  if (!g.has_witness()) throw UnsupportedWitness(g.name() + " has no subgradient witness");
  if (!(tau > 0.0)) throw Error("check_prox_optimality: tau must be positive");
  if (x.size() != p.size() || y_shift.size() != p.size())
    throw DimensionMismatch("check_prox_optimality: dimension mismatch");
  return g.subgradient_distance(p, (x + tau * y_shift - p) / tau);
}

}  // namespace disa
