#include "disa/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>

namespace disa {

Graph::Graph(std::size_t node_count, std::vector<std::pair<std::size_t, std::size_t>> edges)
    : node_count_(node_count), adjacency_(node_count) {
  if (node_count == 0) throw Error("graph needs at least one node");
  for (auto [a, b] : edges) {
    if (a >= node_count || b >= node_count) throw Error("edge index out of range");
    if (a == b) throw Error("self-loops are implicit and must not be stored");
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  for (auto [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

bool Graph::has_edge(std::size_t i, std::size_t j) const {
  const auto& adj = adjacency_[i];
  return std::binary_search(adj.begin(), adj.end(), j);
}

bool Graph::connected() const {
  std::vector<bool> seen(node_count_, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    auto u = frontier.front();
    frontier.pop();
    for (auto v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == node_count_;
}

std::string TopologySpec::to_string() const {
  switch (kind) {
    case TopologyKind::line: return "line";
    case TopologyKind::cycle: return "cycle";
    case TopologyKind::star: return "star";
    case TopologyKind::complete: return "complete";
    case TopologyKind::erdos_renyi: {
      std::ostringstream os;
      os.precision(17);
      os << "erdos_renyi(" << edge_probability << "," << seed << ")";
      return os.str();
    }
  }
  return "line";
}

TopologySpec TopologySpec::parse(const std::string& text) {
  TopologySpec spec;
  if (text == "line") {
    spec.kind = TopologyKind::line;
  } else if (text == "cycle") {
    spec.kind = TopologyKind::cycle;
  } else if (text == "star") {
    spec.kind = TopologyKind::star;
  } else if (text == "complete") {
    spec.kind = TopologyKind::complete;
  } else if (text.rfind("erdos_renyi(", 0) == 0 && text.back() == ')') {
    spec.kind = TopologyKind::erdos_renyi;
    auto inner = text.substr(12, text.size() - 13);
    auto comma = inner.find(',');
    if (comma == std::string::npos) throw ConfigError("erdos_renyi needs (p, seed): " + text);
    try {
      spec.edge_probability = std::stod(inner.substr(0, comma));
      spec.seed = std::stoull(inner.substr(comma + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad erdos_renyi parameters: " + text);
    }
    if (!(spec.edge_probability > 0.0 && spec.edge_probability <= 1.0))
      throw ConfigError("erdos_renyi probability must lie in (0, 1]");
  } else {
    throw ConfigError("unknown topology: " + text);
  }
  return spec;
}

Graph build_graph(const TopologySpec& spec, std::size_t m) {
  if (m == 0) throw Error("agent count must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  switch (spec.kind) {
    case TopologyKind::line:
      for (std::size_t i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      break;
    case TopologyKind::cycle:
      for (std::size_t i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      if (m > 2) edges.emplace_back(m - 1, 0);
      break;
    case TopologyKind::star:
      for (std::size_t i = 1; i < m; ++i) edges.emplace_back(0, i);
      break;
    case TopologyKind::complete:
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) edges.emplace_back(i, j);
      break;
    case TopologyKind::erdos_renyi: {
      constexpr int kAttempts = 100;
      for (int attempt = 0; attempt < kAttempts; ++attempt) {
        std::mt19937_64 rng(spec.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt));
        std::bernoulli_distribution coin(spec.edge_probability);
        edges.clear();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = i + 1; j < m; ++j)
            if (coin(rng)) edges.emplace_back(i, j);
        Graph g(m, edges);
        if (g.connected()) return g;
      }
      throw DisconnectedGraph("erdos_renyi sample stayed disconnected after 100 attempts");
    }
  }
  Graph g(m, std::move(edges));
  if (!g.connected()) throw DisconnectedGraph("topology " + spec.to_string() + " is disconnected");
  return g;
}

MixingMatrix::MixingMatrix(Matrix weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols() || weights_.rows() == 0)
    throw DimensionMismatch("mixing matrix must be square and nonempty");
  const auto m = size();
  rows_.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (weights_(i, j) != 0.0) rows_[i].push_back({j, weights_(i, j)});
}

MixingMatrix metropolis_weights(const Graph& g) {
  const auto m = g.node_count();
  Matrix w = Matrix::Zero(m, m);
  for (auto [a, b] : g.edges()) {
    double wij = 1.0 / (1.0 + static_cast<double>(std::max(g.degree(a), g.degree(b))));
    w(a, b) = wij;
    w(b, a) = wij;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double off = 0.0;
    for (auto j : g.neighbors(i)) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(w));
}

MixingReport validate_mixing_matrix(const MixingMatrix& w, const Graph& g, double tol) {
  if (w.size() != g.node_count()) throw DimensionMismatch("mixing matrix and graph sizes differ");
  MixingReport report;
  const Matrix& d = w.dense();
  const auto m = w.size();

  report.symmetric = (d - d.transpose()).cwiseAbs().maxCoeff() <= tol;
  if (!report.symmetric) report.violations.push_back("not symmetric");

  const double row_dev = (d.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double col_dev = (d.colwise().sum().array() - 1.0).abs().maxCoeff();
  report.stochastic = row_dev <= tol && col_dev <= tol;
  if (!report.stochastic) report.violations.push_back("rows or columns do not sum to 1");

  report.sparsity_pattern = true;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      bool allowed = (i == j) || g.has_edge(i, j);
      if (allowed ? !(d(i, j) > 0.0) : d(i, j) != 0.0) report.sparsity_pattern = false;
    }
  }
  if (!report.sparsity_pattern)
    report.violations.push_back("weights are not positive exactly on edges and the diagonal");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (d + d.transpose()), Eigen::EigenvaluesOnly);
  const Vector& lambda = eig.eigenvalues();  // ascending
  std::size_t near_one = 0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k)
    if (std::abs(lambda(k) - 1.0) <= 1e3 * tol + 1e-10) ++near_one;
  report.simple_unit_eigenvalue = near_one == 1;
  if (!report.simple_unit_eigenvalue) report.violations.push_back("eigenvalue 1 is not simple");

  double second = 0.0;
  for (Eigen::Index k = 0; k + 1 < lambda.size(); ++k) second = std::max(second, std::abs(lambda(k)));
  report.second_largest_magnitude = second;
  report.spectrum_in_range = m == 1 || (lambda(0) > -1.0 + tol && lambda(lambda.size() - 2) < 1.0 - tol &&
                                        lambda(lambda.size() - 1) <= 1.0 + tol);
  if (!report.spectrum_in_range) report.violations.push_back("spectrum not contained in (-1, 1]");
  return report;
}

AgentBlocks gossip_round(const MixingMatrix& w, const AgentBlocks& x) {
  if (static_cast<std::size_t>(x.cols()) != w.size())
    throw DimensionMismatch("gossip input has wrong number of agent blocks");
  AgentBlocks out = AgentBlocks::Zero(x.rows(), x.cols());
  for (std::size_t i = 0; i < w.size(); ++i)
    for (const auto& e : w.row(i)) out.col(i) += e.weight * x.col(e.agent);
  return out;
}

double consensus_quadratic_form(const MixingMatrix& w, const AgentBlocks& x) {
  if (static_cast<std::size_t>(x.cols()) != w.size())
    throw DimensionMismatch("consensus input has wrong number of agent blocks");
  // x^T (I-W) x = ½ Σ_{i≠j} W_ij ‖x_i - x_j‖² + Σ_i (1 - Σ_j W_ij) ‖x_i‖²; the
  // edge form is nonnegative and avoids cancellation near consensus.
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double row_sum = 0.0;
    for (const auto& e : w.row(i)) {
      row_sum += e.weight;
      if (e.agent != i) total += 0.5 * e.weight * (x.col(i) - x.col(e.agent)).squaredNorm();
    }
    total += (1.0 - row_sum) * x.col(i).squaredNorm();
  }
  return total;
}

double consensus_violation(const MixingMatrix& w, const AgentBlocks& x, double tol) {
  const double q = consensus_quadratic_form(w, x);
  if (q < -tol) throw InvalidMixingMatrix("negative consensus quadratic form; W is not a valid mixing matrix");
  return std::sqrt(std::max(q, 0.0));
}

AgentBlocks ConsensusOperator::apply(const AgentBlocks& x) const {
  return 0.5 * (x - gossip_round(*w_, x));
}

DenseConsensusFactors dense_consensus_factors(const MixingMatrix& w) {
  const auto m = static_cast<Eigen::Index>(w.size());
  Matrix half_laplacian = 0.5 * (Matrix::Identity(m, m) - w.dense());
  half_laplacian = 0.5 * (half_laplacian + half_laplacian.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(half_laplacian);
  const Vector& lambda = eig.eigenvalues();
  const Matrix& vecs = eig.eigenvectors();
  Vector root(m), inv_root(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double l = std::max(lambda(k), 0.0);
    root(k) = std::sqrt(l);
    inv_root(k) = l > 1e-12 ? 1.0 / root(k) : 0.0;
  }
  DenseConsensusFactors f;
  f.sqrt_half_laplacian = vecs * root.asDiagonal() * vecs.transpose();
  f.pseudo_inverse = vecs * inv_root.asDiagonal() * vecs.transpose();
  return f;
}

}  // namespace disa
