#include "disa/problems.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace disa {

LeastSquaresLoss::LeastSquaresLoss(Matrix q_matrix, Vector q_vector)
    : design_(std::move(q_matrix)), target_(std::move(q_vector)) {
  if (design_.rows() != target_.size()) throw DimensionMismatch("least squares: Q and q disagree");
  gram_ = design_.transpose() * design_;
  design_t_target_ = design_.transpose() * target_;
  lipschitz_ = design_.size() == 0 || design_.isZero(0.0) ? 0.0 : lipschitz_estimate(design_);
}

double LeastSquaresLoss::value(const Vector& x) const { return 0.5 * (design_ * x - target_).squaredNorm(); }

Vector LeastSquaresLoss::gradient(const Vector& x) const { return gram_ * x - design_t_target_; }

LogisticRidgeLoss::LogisticRidgeLoss(Matrix features, Vector labels, double ridge)
    : features_(std::move(features)), labels_(std::move(labels)), ridge_(ridge) {
  if (features_.rows() != labels_.size()) throw DimensionMismatch("logistic: features and labels disagree");
  for (Eigen::Index j = 0; j < labels_.size(); ++j)
    if (labels_(j) != 1.0 && labels_(j) != -1.0) throw BadLabels("logistic labels must be -1 or +1");
  const double s = static_cast<double>(std::max<Eigen::Index>(features_.rows(), 1));
  const double data_part =
      features_.rows() == 0 || features_.isZero(0.0) ? 0.0 : lipschitz_estimate(features_) / (4.0 * s);
  lipschitz_ = data_part + ridge_;
}

double LogisticRidgeLoss::value(const Vector& x) const {
  double total = 0.0;
  if (features_.rows() > 0) {
    const Vector margins = (features_ * x).cwiseProduct(labels_);
    for (Eigen::Index j = 0; j < margins.size(); ++j) {
      const double z = -margins(j);
      total += z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    total /= static_cast<double>(features_.rows());
  }
  return total + 0.5 * ridge_ * x.squaredNorm();
}

Vector LogisticRidgeLoss::gradient(const Vector& x) const {
  Vector g = ridge_ * x;
  if (features_.rows() == 0) return g;
  const Vector margins = (features_ * x).cwiseProduct(labels_);
  Vector weights(margins.size());
  for (Eigen::Index j = 0; j < margins.size(); ++j) {
    // d/dz log(1+e^{-z}) = −σ(−z)
    const double z = margins(j);
    const double sig = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    weights(j) = -sig * labels_(j);
  }
  g += features_.transpose() * weights / static_cast<double>(features_.rows());
  return g;
}

ProblemInstance::ProblemInstance(std::vector<AgentProblem> agents, InstanceMetadata meta)
    : agents_(std::move(agents)), meta_(std::move(meta)) {
  if (agents_.empty()) throw Error("problem instance needs at least one agent");
  n_ = agents_.front().f->dim();
  p_ = static_cast<std::size_t>(agents_.front().U.rows());
  for (const auto& a : agents_) {
    if (!a.f || !a.g) throw Error("agent problem is missing an oracle");
    if (a.f->dim() != n_ || static_cast<std::size_t>(a.U.cols()) != n_ ||
        static_cast<std::size_t>(a.U.rows()) != p_)
      throw DimensionMismatch("agents must share primal and map dimensions");
  }
}

Vector ProblemInstance::lipschitz_constants() const {
  Vector l(static_cast<Eigen::Index>(agents_.size()));
  for (std::size_t i = 0; i < agents_.size(); ++i) l(i) = agents_[i].lipschitz();
  return l;
}

double ProblemInstance::objective(const Vector& x) const {
  double total = 0.0;
  for (const auto& a : agents_) total += a.f->value(x) + (p_ > 0 ? a.g->value(a.U * x) : 0.0);
  return total;
}

double ProblemInstance::objective(const AgentBlocks& x1) const {
  if (static_cast<std::size_t>(x1.cols()) != agents_.size() || static_cast<std::size_t>(x1.rows()) != n_)
    throw DimensionMismatch("objective: stacked input has wrong shape");
  double total = 0.0;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const Vector xi = x1.col(i);
    total += agents_[i].f->value(xi) + (p_ > 0 ? agents_[i].g->value(agents_[i].U * xi) : 0.0);
  }
  return total;
}

double ProblemInstance::max_map_norm_sq() const {
  double best = 0.0;
  for (const auto& a : agents_)
    if (a.U.size() > 0 && !a.U.isZero(0.0)) best = std::max(best, lipschitz_estimate(a.U.transpose()));
  return best;
}

double power_iteration(const std::function<Vector(const Vector&)>& apply, std::size_t dim, std::size_t max_iters,
                       double rel_tol) {
  if (dim == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Vector v(static_cast<Eigen::Index>(dim));
  for (auto& e : v) e = unif(rng);
  v.normalize();
  double lambda = 0.0;
  std::size_t settled = 0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    Vector w = apply(v);
    const double next = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      if (++settled >= 3) return next;
    } else {
      settled = 0;
    }
    lambda = next;
  }
  throw NoConvergence("power iteration did not settle within the iteration cap");
}

double lipschitz_estimate(const Matrix& m) {
  if (m.size() == 0 || m.isZero(0.0)) throw Error("lipschitz_estimate: matrix must be nonzero");
  const Matrix gram = m.cols() <= m.rows() ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  return power_iteration([&gram](const Vector& v) { return Vector(gram * v); },
                         static_cast<std::size_t>(gram.rows()));
}

ProblemInstance make_generalized_lasso(std::size_t m, std::size_t n, std::uint64_t seed, double u_scale,
                                       std::size_t u_rows) {
  if (m == 0 || n == 0) throw Error("generalized lasso needs m, n >= 1");
  if (!(u_scale > 0.0)) throw Error("u_scale must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix a(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) a(r, c) = normal(rng);
    return a;
  };
  std::vector<AgentProblem> agents;
  auto g = make_l1_prox(1.0);
  const auto ni = static_cast<Eigen::Index>(n);
  for (std::size_t i = 0; i < m; ++i) {
    Matrix q = draw(2 * ni, ni);
    Vector target = draw(2 * ni, 1);
    Matrix u = draw(static_cast<Eigen::Index>(u_rows), ni);
    u *= kLassoMapBaseScale * u_scale;
    agents.push_back({std::make_shared<LeastSquaresLoss>(std::move(q), std::move(target)), g, std::move(u)});
  }
  return ProblemInstance(std::move(agents), {"generalized_lasso", seed, u_scale});
}

ProblemInstance make_distributed_logistic(const std::vector<LabeledData>& per_agent, std::size_t u_rows,
                                          std::uint64_t seed, double u_scale) {
  if (per_agent.empty()) throw Error("logistic instance needs at least one agent");
  const auto n = per_agent.front().features.cols();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto g = make_euclidean_norm_prox(0.5);
  std::vector<AgentProblem> agents;
  for (const auto& d : per_agent) {
    if (d.features.cols() != n) throw DimensionMismatch("all agents need the same feature dimension");
    for (Eigen::Index j = 0; j < d.labels.size(); ++j)
      if (d.labels(j) != 1.0 && d.labels(j) != -1.0) throw BadLabels("labels must be -1 or +1");
    Matrix u(static_cast<Eigen::Index>(u_rows), n);
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < u.rows(); ++r) u(r, c) = u_scale * normal(rng);
    agents.push_back({std::make_shared<LogisticRidgeLoss>(d.features, d.labels, 1.0), g, std::move(u)});
  }
  return ProblemInstance(std::move(agents), {"distributed_logistic", seed, u_scale});
}

std::vector<LabeledData> split_samples(const LabeledData& data, std::size_t m, std::uint64_t seed) {
  if (m == 0) throw Error("split_samples: need at least one agent");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.features.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<LabeledData> parts(m);
  const std::size_t total = order.size();
  std::size_t start = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t count = total / m + (i < total % m ? 1 : 0);
    auto& part = parts[i];
    part.features.resize(static_cast<Eigen::Index>(count), data.features.cols());
    part.labels.resize(static_cast<Eigen::Index>(count));
    for (std::size_t k = 0; k < count; ++k) {
      part.features.row(static_cast<Eigen::Index>(k)) = data.features.row(order[start + k]);
      part.labels(static_cast<Eigen::Index>(k)) = data.labels(order[start + k]);
    }
    start += count;
  }
  return parts;
}

LabeledData make_synthetic_classification(std::size_t samples, std::size_t n, std::uint64_t seed,
                                          double separation) {
  if (n == 0) throw Error("synthetic data needs at least one feature");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double shift = separation / std::sqrt(static_cast<double>(n));
  LabeledData d;
  d.features.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(n));
  d.labels.resize(static_cast<Eigen::Index>(samples));
  for (Eigen::Index s = 0; s < d.features.rows(); ++s) {
    const double label = coin(rng) ? 1.0 : -1.0;
    d.labels(s) = label;
    for (Eigen::Index c = 0; c < d.features.cols(); ++c) d.features(s, c) = label * shift + normal(rng);
  }
  return d;
}

LabeledData parse_libsvm(std::istream& in) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<double> labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string label_text;
    if (!(tokens >> label_text)) continue;
    double label;
    try {
      std::size_t used = 0;
      label = std::stod(label_text, &used);
      if (used != label_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad label '" + label_text + "'");
    }
    if (label == 0.0) label = -1.0;
    if (label != 1.0 && label != -1.0) throw ParseError(line_no, "label must be one of -1, 0, +1");
    std::vector<std::pair<std::size_t, double>> row;
    std::string item;
    while (tokens >> item) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw ParseError(line_no, "expected idx:val, got '" + item + "'");
      long long index;
      double value;
      try {
        std::size_t used = 0;
        index = std::stoll(item.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("index");
        auto rest = item.substr(colon + 1);
        value = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("value");
      } catch (const std::exception&) {
        throw ParseError(line_no, "malformed feature '" + item + "'");
      }
      if (index <= 0) throw IndexError(line_no, "feature indices are 1-based and must be positive");
      row.emplace_back(static_cast<std::size_t>(index), value);
      max_index = std::max(max_index, static_cast<std::size_t>(index));
    }
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  LabeledData d;
  d.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(max_index));
  d.labels.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    d.labels(static_cast<Eigen::Index>(r)) = labels[r];
    for (auto [idx, val] : rows[r])
      d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx - 1)) = val;
  }
  return d;
}

void write_libsvm(std::ostream& out, const LabeledData& data) {
  const auto old_precision = out.precision(17);
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    out << (data.labels(r) > 0 ? "+1" : "-1");
    for (Eigen::Index c = 0; c < data.features.cols(); ++c)
      if (data.features(r, c) != 0.0) out << ' ' << (c + 1) << ':' << data.features(r, c);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace disa
