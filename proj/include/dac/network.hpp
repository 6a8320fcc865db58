#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "dac/error.hpp"
#include "dac/rng.hpp"

namespace dac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Undirected communication graph. Connectivity is checked at construction;
// self-loops live in the weight matrices, not in the edge set.
class TopologyGraph {
 public:
  TopologyGraph(int n, std::vector<std::pair<int, int>> edges)
      : n_(n), edges_(std::move(edges)), adjacency_(static_cast<std::size_t>(n)) {
    require(n_ >= 1, "TopologyGraph: need at least one agent");
    for (auto& [a, b] : edges_) {
      require(a >= 0 && a < n_ && b >= 0 && b < n_,
              "TopologyGraph: edge endpoint out of range");
      require(a != b, "TopologyGraph: self-loops are not edges");
      if (a > b) std::swap(a, b);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (const auto& [a, b] : edges_) {
      adjacency_[static_cast<std::size_t>(a)].push_back(b);
      adjacency_[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
    if (!connected())
      throw ConfigError("TopologyGraph: graph is not connected");
  }

  // rows x cols grid with up/down/left/right neighbors, agents in row-major
  // order. grid(2, 3) is the six-center layout used by the dispatch example.
  static TopologyGraph grid(int rows, int cols) {
    require(rows >= 1 && cols >= 1, "TopologyGraph::grid: bad shape");
    std::vector<std::pair<int, int>> edges;
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
        if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c));
      }
    return TopologyGraph(rows * cols, std::move(edges));
  }

  int num_agents() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const {
    return adjacency_.at(static_cast<std::size_t>(i));
  }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }

  bool has_edge(int a, int b) const {
    const auto& nb = neighbors(a);
    return std::binary_search(nb.begin(), nb.end(), b);
  }

 private:
  bool connected() const {
    std::vector<bool> seen(static_cast<std::size_t>(n_), false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int count = 1;
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop();
      for (int w : neighbors(v))
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          ++count;
          frontier.push(w);
        }
    }
    return count == n_;
  }

  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
};

// W_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal absorbs the rest.
// Symmetric and doubly stochastic on any connected graph.
inline Matrix metropolis_weights(const TopologyGraph& graph) {
  const int n = graph.num_agents();
  Matrix w = Matrix::Zero(n, n);
  for (const auto& [a, b] : graph.edges()) {
    const double wij = 1.0 / (1.0 + std::max(graph.degree(a), graph.degree(b)));
    w(a, b) = wij;
    w(b, a) = wij;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return w;
}

// kIdentity never mixes; it exists so the pre-flight checks can demonstrate
// rejection of a non-contracting scheme.
enum class WeightScheme { kMetropolisFixed, kLazyRandomGossip, kIdentity };

inline std::string to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::kMetropolisFixed:
      return "metropolis";
    case WeightScheme::kLazyRandomGossip:
      return "gossip";
    default:
      return "identity";
  }
}

inline WeightScheme weight_scheme_from_string(const std::string& name) {
  if (name == "metropolis") return WeightScheme::kMetropolisFixed;
  if (name == "gossip") return WeightScheme::kLazyRandomGossip;
  if (name == "identity") return WeightScheme::kIdentity;
  throw ConfigError("unknown weight scheme: " + name);
}

// Distribution over consensus matrices W_t on a fixed graph. Every draw is
// row stochastic with the graph's sparsity pattern; the draw stream is
// independent of the environment streams by construction.
class WeightMatrixSampler {
 public:
  WeightMatrixSampler(TopologyGraph graph, WeightScheme scheme,
                      std::uint64_t seed)
      : graph_(std::move(graph)),
        scheme_(scheme),
        rng_(seed),
        metropolis_(metropolis_weights(graph_)) {}

  const TopologyGraph& graph() const { return graph_; }
  WeightScheme scheme() const { return scheme_; }

  Matrix draw() {
    Matrix w;
    if (scheme_ == WeightScheme::kMetropolisFixed) {
      w = metropolis_;
    } else if (scheme_ == WeightScheme::kIdentity) {
      w = Matrix::Identity(graph_.num_agents(), graph_.num_agents());
    } else {
      const int n = graph_.num_agents();
      w = Matrix::Identity(n, n);
      if (graph_.num_edges() > 0) {
        const auto& [a, b] =
            graph_.edges()[static_cast<std::size_t>(rng_.uniform_int(graph_.num_edges()))];
        w(a, a) = 0.5;
        w(a, b) = 0.5;
        w(b, b) = 0.5;
        w(b, a) = 0.5;
      }
    }
    check_draw(w);
    return w;
  }

  // Closed-form E[W]: the Metropolis matrix itself, or the uniform mixture
  // of per-edge averaging matrices.
  Matrix expected() const {
    if (scheme_ == WeightScheme::kMetropolisFixed) return metropolis_;
    const int n_id = graph_.num_agents();
    if (scheme_ == WeightScheme::kIdentity)
      return Matrix::Identity(n_id, n_id);
    const int n = graph_.num_agents();
    Matrix mean = Matrix::Zero(n, n);
    for (const auto& [a, b] : graph_.edges()) {
      Matrix w = Matrix::Identity(n, n);
      w(a, a) = 0.5;
      w(a, b) = 0.5;
      w(b, b) = 0.5;
      w(b, a) = 0.5;
      mean += w;
    }
    return mean / static_cast<double>(graph_.num_edges());
  }

  // Closed-form contraction operator M = E[W^T (I - 11^T/N) W].
  Matrix expected_contraction_operator() const {
    const int n = graph_.num_agents();
    const Matrix proj =
        Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
    if (scheme_ == WeightScheme::kIdentity) return proj;
    if (scheme_ == WeightScheme::kMetropolisFixed)
      return metropolis_.transpose() * proj * metropolis_;
    Matrix m = Matrix::Zero(n, n);
    for (const auto& [a, b] : graph_.edges()) {
      Matrix w = Matrix::Identity(n, n);
      w(a, a) = 0.5;
      w(a, b) = 0.5;
      w(b, b) = 0.5;
      w(b, a) = 0.5;
      m += w.transpose() * proj * w;
    }
    return m / static_cast<double>(graph_.num_edges());
  }

  std::string rng_state() const { return rng_.state(); }
  void set_rng_state(const std::string& s) { rng_.set_state(s); }

 private:
  void check_draw(const Matrix& w) const {
    const int n = graph_.num_agents();
    for (int i = 0; i < n; ++i) {
      require(std::abs(w.row(i).sum() - 1.0) <= 1e-12,
              "WeightMatrixSampler: draw is not row stochastic");
      for (int j = 0; j < n; ++j)
        require(w(i, j) == 0.0 || i == j || graph_.has_edge(i, j),
                "WeightMatrixSampler: draw violates the graph sparsity");
    }
  }

  TopologyGraph graph_;
  WeightScheme scheme_;
  Rng rng_;
  Matrix metropolis_;
};

// Largest eigenvalue of a symmetric PSD matrix by dense solve.
inline double spectral_norm_dense(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().maxCoeff();
}

// Same quantity by plain power iteration; the independent route used to
// cross-check the dense solver.
inline double spectral_norm_power(const Matrix& m, double tol = 1e-13,
                                  int max_iters = 1000000) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Rng rng(0x9E3779B9ull);
  Vector v(sym.rows());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(0.5, 1.5);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector next = sym * v;
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    const double lambda_next = next.dot(sym * next);
    if (std::abs(lambda_next - lambda) <= tol * std::max(1.0, std::abs(lambda_next))) {
      return lambda_next;
    }
    lambda = lambda_next;
    v = next;
  }
  return lambda;
}

// rho_W for a fixed matrix: |W^T (I - 11^T/N) W|_2, exact.
inline double spectral_contraction(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  const Matrix proj = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
  return spectral_norm_dense(w.transpose() * proj * w);
}

// rho_W from the sampler's closed-form expectation.
inline double spectral_contraction_exact(const WeightMatrixSampler& sampler) {
  return spectral_norm_dense(sampler.expected_contraction_operator());
}

// rho_W by Monte-Carlo over draws; used to validate random schemes where no
// closed form is assumed.
inline double spectral_contraction_sampled(WeightMatrixSampler& sampler,
                                           int n_samples) {
  require(n_samples >= 10000,
          "spectral_contraction_sampled: need at least 1e4 samples");
  const int n = sampler.graph().num_agents();
  const Matrix proj = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
  Matrix acc = Matrix::Zero(n, n);
  for (int k = 0; k < n_samples; ++k) {
    const Matrix w = sampler.draw();
    acc += w.transpose() * proj * w;
  }
  return spectral_norm_dense(acc / static_cast<double>(n_samples));
}

// Assumption gate for the consensus weights: every scheme must contract the
// disagreement subspace.
inline void validate_contraction(double rho_w) {
  if (!(rho_w < 1.0 - 1e-12))
    throw ConfigError("weight scheme rejected: rho_W = " +
                      std::to_string(rho_w) + " (need rho_W < 1)");
}

}  // namespace dac
