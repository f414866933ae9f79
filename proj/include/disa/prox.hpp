#pragma once

#include "disa/common.hpp"

#include <memory>
#include <string>

namespace disa {

// Closed-form proximal maps. Each returns argmin_x λ·g(x) + ½‖x − v‖².
Vector prox_l1(const Vector& v, double lambda);
Vector prox_euclidean_norm(const Vector& v, double lambda);
Vector prox_linf(const Vector& v, double lambda);
Vector prox_elastic_net(const Vector& v, double lambda1, double lambda2);
Vector prox_hinge(const Vector& v, double lambda);
Vector prox_box_upper(const Vector& v, const Vector& upper);

// Euclidean projection onto {x : ‖x‖₁ ≤ radius}, sort-based, O(d log d).
Vector project_l1_ball(const Vector& v, double radius);

// A proper closed convex g with an evaluable proximal map. Operators that can
// describe their subdifferential expose subgradient_distance, which the
// inexact-prox certificates are checked against.
class ProxOperator {
 public:
  virtual ~ProxOperator() = default;

  virtual std::string name() const = 0;
  // g(x); +infinity outside the domain.
  virtual double value(const Vector& x) const = 0;
  // prox_{t·g}(v), t > 0.
  virtual Vector prox(const Vector& v, double t) const = 0;

  virtual bool has_witness() const { return false; }
  // dist(z, ∂g(x)); +infinity when x is outside dom g.
  virtual double subgradient_distance(const Vector& x, const Vector& z) const;
};

using ProxPtr = std::shared_ptr<const ProxOperator>;

ProxPtr make_zero_prox();
ProxPtr make_l1_prox(double weight = 1.0);
ProxPtr make_euclidean_norm_prox(double weight = 1.0);
ProxPtr make_linf_prox(double weight = 1.0);
ProxPtr make_elastic_net_prox(double l1_weight, double l2_weight);
ProxPtr make_hinge_prox(double weight = 1.0);
ProxPtr make_box_upper_prox(Vector upper);

// prox_{β g*}(v) through the Moreau identity v = prox_{βg*}(v) + β·prox_{g/β}(v/β).
Vector moreau_conjugate_prox(const ProxOperator& g, const Vector& v, double beta);

struct ProxCertificate {
  Vector point;
  double residual_bound = 0.0;
  Vector witness;  // d ∈ ∂g(point) − y + (point − x)/τ
};

// dist((x + τ·y_shift − p)/τ, ∂g(p)): zero when p = prox_{τg}(x + τ·y_shift).
double check_prox_optimality(const ProxOperator& g, const Vector& x, double tau, const Vector& p,
                             const Vector& y_shift);

}  // namespace disa
