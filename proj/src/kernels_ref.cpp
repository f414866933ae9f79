#include "disa/kernels.hpp"

namespace disa::kernels {

namespace {

void gradients(const KernelContext& c, const AgentBlocks& x1, AgentBlocks& grad, CallCounters& n) {
  grad.resize(x1.rows(), x1.cols());
  for (Eigen::Index i = 0; i < x1.cols(); ++i) {
    grad.col(i) = c.inst->agent(static_cast<std::size_t>(i)).f->gradient(x1.col(i));
    ++n.gradient_calls[static_cast<std::size_t>(i)];
  }
}

void primal_linear(const KernelContext& c, const AgentBlocks& x1, const AgentBlocks& grad,
                   const AgentBlocks& y1_tilde, const AgentBlocks& y2, AgentBlocks& out) {
  out.resize(x1.rows(), x1.cols());
  for (Eigen::Index i = 0; i < x1.cols(); ++i) {
    const double tau = c.steps->tau[i];
    Vector direction = grad.col(i) + y1_tilde.col(i);
    if (y2.rows() > 0) direction += c.inst->agent(static_cast<std::size_t>(i)).U.transpose() * y2.col(i);
    out.col(i) = x1.col(i) - tau * direction;
  }
}

void prox_step(const KernelContext& c, const AgentBlocks& x2, const AgentBlocks& y2, AgentBlocks& out,
               CallCounters& n) {
  out.resize(x2.rows(), x2.cols());
  if (x2.rows() == 0) return;
  for (Eigen::Index i = 0; i < x2.cols(); ++i) {
    const double tau = c.steps->tau[i];
    const Vector arg = x2.col(i) + tau * y2.col(i);
    out.col(i) = c.inst->agent(static_cast<std::size_t>(i)).g->prox(arg, tau);
    ++n.prox_calls[static_cast<std::size_t>(i)];
  }
}

void gossip(const KernelContext& c, const AgentBlocks& x, AgentBlocks& out, CallCounters& n) {
  out.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    out.col(i).setZero();
    for (const auto& e : c.w->row(static_cast<std::size_t>(i))) {
      out.col(i) += e.weight * x.col(static_cast<Eigen::Index>(e.agent));
    }
  }
  ++n.gossip_rounds;
}

void dual_update(const KernelContext& c, const AgentBlocks& xbar1, const AgentBlocks& xbar2,
                 const AgentBlocks& mixed, AgentBlocks& y1_tilde, AgentBlocks& y2) {
  const double half_beta = 0.5 * c.steps->beta;
  for (Eigen::Index i = 0; i < xbar1.cols(); ++i) {
    y1_tilde.col(i) += half_beta * (xbar1.col(i) - mixed.col(i));
    if (y2.rows() > 0) {
      const auto a = static_cast<std::size_t>(i);
      const Vector residual = c.inst->agent(a).U * xbar1.col(i) - xbar2.col(i);
      y2.col(i) += c.pc->apply_inverse(a, residual);
    }
  }
}

void correction(const KernelContext& c, const AgentBlocks& y1_old, const AgentBlocks& y2_old,
                const AgentBlocks& y1_new, const AgentBlocks& y2_new, AgentBlocks& x1, AgentBlocks& x2) {
  for (Eigen::Index i = 0; i < x1.cols(); ++i) {
    const double tau = c.steps->tau[i];
    Vector shift = y1_old.col(i) - y1_new.col(i);
    if (x2.rows() > 0) {
      const Vector dy2 = y2_old.col(i) - y2_new.col(i);
      shift += c.inst->agent(static_cast<std::size_t>(i)).U.transpose() * dy2;
      x2.col(i) -= tau * dy2;
    }
    x1.col(i) += tau * shift;
  }
}

}  // namespace

const Ops& reference_ops() {
  static const Ops ops{gradients, primal_linear, prox_step, gossip, dual_update, correction};
  return ops;
}

const Ops& ops_for(Execution e) { return e == Execution::parallel ? parallel_ops() : reference_ops(); }

}  // namespace disa::kernels
