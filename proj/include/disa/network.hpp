#pragma once

#include "disa/common.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace disa {

// Undirected simple graph over agents 0..node_count-1. Self-loops are never
// stored; every agent implicitly neighbours itself in the mixing step.
class Graph {
 public:
  Graph(std::size_t node_count, std::vector<std::pair<std::size_t, std::size_t>> edges);

  std::size_t node_count() const { return node_count_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_[i]; }
  std::size_t degree(std::size_t i) const { return adjacency_[i].size(); }
  bool has_edge(std::size_t i, std::size_t j) const;
  bool connected() const;

 private:
  std::size_t node_count_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;  // i < j, sorted
  std::vector<std::vector<std::size_t>> adjacency_;
};

enum class TopologyKind { line, cycle, star, complete, erdos_renyi };

struct TopologySpec {
  TopologyKind kind = TopologyKind::line;
  double edge_probability = 0.5;  // erdos_renyi only
  std::uint64_t seed = 0;         // erdos_renyi only

  std::string to_string() const;
  static TopologySpec parse(const std::string& text);
};

Graph build_graph(const TopologySpec& spec, std::size_t m);

// Symmetric doubly stochastic weights plus the sparse neighbour lists used by
// the gossip step. The neighbour list of i contains i itself.
class MixingMatrix {
 public:
  explicit MixingMatrix(Matrix weights);

  std::size_t size() const { return static_cast<std::size_t>(weights_.rows()); }
  const Matrix& dense() const { return weights_; }
  double operator()(std::size_t i, std::size_t j) const { return weights_(i, j); }

  struct Entry {
    std::size_t agent;
    double weight;
  };
  const std::vector<Entry>& row(std::size_t i) const { return rows_[i]; }

 private:
  Matrix weights_;
  std::vector<std::vector<Entry>> rows_;
};

MixingMatrix metropolis_weights(const Graph& g);

struct MixingReport {
  bool symmetric = false;
  bool stochastic = false;
  bool sparsity_pattern = false;
  bool simple_unit_eigenvalue = false;
  bool spectrum_in_range = false;  // all other eigenvalues in (-1, 1)
  double second_largest_magnitude = 0.0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

MixingReport validate_mixing_matrix(const MixingMatrix& w, const Graph& g, double tol = 1e-12);

// Block i of the result is sum_{j in N_i} W_ij x.col(j); only neighbour
// columns are read.
AgentBlocks gossip_round(const MixingMatrix& w, const AgentBlocks& x);

// x^T ((I-W) ⊗ I) x, evaluated through the neighbour lists.
double consensus_quadratic_form(const MixingMatrix& w, const AgentBlocks& x);

// sqrt(x^T ((I-W) ⊗ I) x). Throws InvalidMixingMatrix when the form is
// negative beyond -tol.
double consensus_violation(const MixingMatrix& w, const AgentBlocks& x, double tol = 1e-10);

// Applies V = ½(I-W) ⊗ I_n.
class ConsensusOperator {
 public:
  explicit ConsensusOperator(const MixingMatrix& w) : w_(&w) {}
  AgentBlocks apply(const AgentBlocks& x) const;
  const MixingMatrix& mixing() const { return *w_; }

 private:
  const MixingMatrix* w_;
};

// Dense spectral factors of V used only by verification paths: the m×m
// matrix R = sqrt(½(I-W)) (so √V = R ⊗ I_n) and its pseudo-inverse.
struct DenseConsensusFactors {
  Matrix sqrt_half_laplacian;
  Matrix pseudo_inverse;
};

DenseConsensusFactors dense_consensus_factors(const MixingMatrix& w);

}  // namespace disa
