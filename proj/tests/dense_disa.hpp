#pragma once
// Test-side dense DISA written directly from the stacked-operator form:
//   x̄ = prox_{ΓG}(x − Γ(∇F(x) + Bᵀy)),  y⁺ = y + Q⁻¹Bx̄,  x⁺ = prox_{ΓG}(x − Γ(∇F(x) + Bᵀy⁺))
// with B = [[√V, 0], [U, −I]] and Q = diag(I/β, S). Everything is formed
// explicitly, including √V by eigendecomposition.

#include "disa/problems.hpp"
#include "disa/network.hpp"
#include "oracles.hpp"

namespace oracle {

struct DenseDisa {
  const disa::ProblemInstance& inst;
  Eigen::Index n, p, m;
  Vector tau;
  double beta;
  Matrix b, q;
  Vector x, y;

  DenseDisa(const disa::ProblemInstance& instance, const disa::MixingMatrix& w, const Vector& taus, double dual_step)
      : inst(instance),
        n(static_cast<Eigen::Index>(instance.primal_dim())),
        p(static_cast<Eigen::Index>(instance.map_dim())),
        m(static_cast<Eigen::Index>(instance.agent_count())),
        tau(taus),
        beta(dual_step) {
    const Matrix half_lap = 0.5 * (Matrix::Identity(m, m) - w.dense());
    const Matrix sqrt_v = kron_identity(psd_sqrt(half_lap), n);
    b = Matrix::Zero(n * m + p * m, n * m + p * m);
    b.topLeftCorner(n * m, n * m) = sqrt_v;
    q = Matrix::Zero(n * m + p * m, n * m + p * m);
    q.topLeftCorner(n * m, n * m) = Matrix::Identity(n * m, n * m) / beta;
    const double tmax = tau.maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
      const Matrix& u = inst.agent(static_cast<std::size_t>(i)).U;
      b.block(n * m + p * i, n * i, p, n) = u;
      b.block(n * m + p * i, n * m + p * i, p, p) = -Matrix::Identity(p, p);
      const double ti = tau(i);
      q.block(n * m + p * i, n * m + p * i, p, p) =
          2.0 * ti * Matrix::Identity(p, p) +
          ti * (1.0 - tmax * beta + ti * beta) / (1.0 - tmax * beta) * u * u.transpose();
    }
    x = Vector::Zero(n * m + p * m);
    y = Vector::Zero(n * m + p * m);
  }

  Vector gradient(const Vector& z) const {
    Vector g = Vector::Zero(z.size());
    for (Eigen::Index i = 0; i < m; ++i)
      g.segment(n * i, n) = inst.agent(static_cast<std::size_t>(i)).f->gradient(z.segment(n * i, n));
    return g;
  }

  Vector gamma_times(const Vector& v) const {
    Vector out = v;
    for (Eigen::Index i = 0; i < m; ++i) {
      out.segment(n * i, n) *= tau(i);
      out.segment(n * m + p * i, p) *= tau(i);
    }
    return out;
  }

  Vector prox(const Vector& v) const {
    Vector out = v;
    for (Eigen::Index i = 0; i < m; ++i)
      out.segment(n * m + p * i, p) = inst.agent(static_cast<std::size_t>(i)).g->prox(v.segment(n * m + p * i, p), tau(i));
    return out;
  }

  void step() {
    const Vector g = gradient(x);
    const Vector xbar = prox(x - gamma_times(g + b.transpose() * y));
    y = y + q.llt().solve(b * xbar);
    x = prox(x - gamma_times(g + b.transpose() * y));
  }

  Matrix x1() const { return unstack(x.head(n * m), n, m); }
  Matrix x2() const { return unstack(x.tail(p * m), p, m); }
  Matrix y1_tilde() const { return unstack(b.topLeftCorner(n * m, n * m) * y.head(n * m), n, m); }
  Matrix y2() const { return unstack(y.tail(p * m), p, m); }
};

}  // namespace oracle
