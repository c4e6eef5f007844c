#include "rpp/graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rpp/rng.hpp"

namespace rpp {

namespace {

constexpr double kNullTol = 1e-9;  // absolute, on normalised eigenvalues

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (auto [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

bool Graph::is_connected() const {
  if (n <= 1) return true;
  Dsu dsu(n);
  for (auto [i, j] : edges) dsu.unite(i, j);
  const int root = dsu.find(0);
  for (int v = 1; v < n; ++v)
    if (dsu.find(v) != root) return false;
  return true;
}

std::string Graph::to_edge_list() const {
  std::ostringstream out;
  out << n << ' ' << edges.size() << '\n';
  for (auto [i, j] : edges) out << i << ' ' << j << '\n';
  if (!coords.empty()) {
    out.precision(17);
    for (int i = 0; i < n; ++i)
      out << i << ' ' << coords[i][0] << ' ' << coords[i][1] << '\n';
  }
  return out.str();
}

Graph Graph::from_edge_list(const std::string& text) {
  std::istringstream in(text);
  Graph g;
  std::size_t m = 0;
  if (!(in >> g.n >> m)) throw std::invalid_argument("edge list: bad header");
  g.edges.reserve(m);
  std::set<std::pair<int, int>> seen;
  for (std::size_t e = 0; e < m; ++e) {
    int i = 0, j = 0;
    if (!(in >> i >> j)) throw std::invalid_argument("edge list: truncated");
    if (i == j || i < 0 || j < 0 || i >= g.n || j >= g.n)
      throw std::invalid_argument("edge list: invalid endpoint");
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second)
      throw std::invalid_argument("edge list: duplicate edge");
    g.edges.emplace_back(std::min(i, j), std::max(i, j));
  }
  int idx = 0;
  double x = 0, y = 0;
  if (in >> idx >> x >> y) {
    g.coords.assign(g.n, {0.0, 0.0});
    g.coords[idx] = {x, y};
    for (int i = 1; i < g.n; ++i) {
      if (!(in >> idx >> x >> y))
        throw std::invalid_argument("edge list: truncated coords");
      g.coords[idx] = {x, y};
    }
  }
  return g;
}

Graph generate_geometric_graph(int n, double radius, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("geometric graph: n must be >= 2");
  if (!(radius > 0)) throw std::invalid_argument("geometric graph: radius must be > 0");

  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    SubstreamRng rng(substream_key(s, 0, 0, /*channel=*/7));
    Graph g;
    g.n = n;
    g.coords.resize(n);
    for (int i = 0; i < n; ++i) g.coords[i] = {rng.uniform01(), rng.uniform01()};
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double dx = g.coords[i][0] - g.coords[j][0];
        const double dy = g.coords[i][1] - g.coords[j][1];
        if (std::sqrt(dx * dx + dy * dy) <= radius) g.edges.emplace_back(i, j);
      }
    }
    if (g.is_connected()) {
      g.seed_used = static_cast<std::int64_t>(s);
      return g;
    }
  }
  throw std::runtime_error(
      "geometric graph: still disconnected after 1000 re-samples "
      "(radius too small for n)");
}

Graph complete_graph(int n) {
  Graph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
  return g;
}

Graph path_graph(int n) {
  Graph g;
  g.n = n;
  for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

void WeightMatrix::finalize(bool check_sparsity, const Graph* g) {
  const int n = static_cast<int>(entries_.rows());
  if (entries_.cols() != n) throw std::invalid_argument("WeightMatrix: not square");

  const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (1.0 + entries_.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("WeightMatrix: not symmetric");
  entries_ = ((entries_ + entries_.transpose()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("WeightMatrix: eigendecomposition failed");
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();

  const double lmax = eigenvalues_[n - 1];
  if (eigenvalues_[0] < -1e-10 * std::abs(lmax))
    throw std::invalid_argument("WeightMatrix: not positive semidefinite");
  if (std::abs(lmax - 1.0) > 1e-10)
    throw std::invalid_argument("WeightMatrix: lambda_max must be 1 after normalisation");

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  if ((entries_ * ones).norm() > 1e-10 * entries_.norm() * std::sqrt(double(n)))
    throw std::invalid_argument("WeightMatrix: null space is not span(1)");

  if (check_sparsity) {
    std::set<std::pair<int, int>> edge_set(g->edges.begin(), g->edges.end());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (entries_(i, j) != 0.0 && !edge_set.count({i, j}))
          throw std::invalid_argument("WeightMatrix: entry outside neighbor structure");
  }

  int below = 0;
  double lmin_nz = lmax;
  for (int i = 0; i < n; ++i) {
    if (eigenvalues_[i] <= kNullTol)
      ++below;
    else
      lmin_nz = std::min(lmin_nz, eigenvalues_[i]);
  }
  if (below != 1)
    throw std::invalid_argument("WeightMatrix: null space dimension != 1 (disconnected?)");
  spectral_ = {lmax, lmin_nz, lmax / lmin_nz};

  support_.assign(n, {});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i == j || entries_(i, j) != 0.0) support_[i].push_back(j);
}

WeightMatrix WeightMatrix::from_graph(const Graph& g, WeightScheme scheme) {
  if (!g.is_connected())
    throw std::invalid_argument("build_weight_matrix: graph must be connected");
  const int n = g.n;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const auto adj = g.adjacency();

  if (scheme == WeightScheme::normalized_laplacian) {
    for (auto [i, j] : g.edges) {
      m(i, j) = m(j, i) = -1.0;
      m(i, i) += 1.0;
      m(j, j) += 1.0;
    }
  } else {  // I - W with Metropolis-Hastings mixing weights
    for (auto [i, j] : g.edges) {
      const double w = 1.0 / (1.0 + std::max(adj[i].size(), adj[j].size()));
      m(i, j) = m(j, i) = -w;
      m(i, i) += w;
      m(j, j) += w;
    }
  }

  const double lmax =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues()(n - 1);
  m /= lmax;

  WeightMatrix p;
  p.entries_ = std::move(m);
  p.finalize(/*check_sparsity=*/true, &g);
  return p;
}

WeightMatrix WeightMatrix::from_dense(Eigen::MatrixXd entries) {
  WeightMatrix p;
  p.entries_ = std::move(entries);
  p.finalize(/*check_sparsity=*/false, nullptr);
  return p;
}

SpectralBounds spectral_bounds(const WeightMatrix& p) {
  if (p.n() == 0) throw std::invalid_argument("spectral_bounds: empty matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.entries(),
                                                    Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const int n = static_cast<int>(ev.size());
  int below = 0;
  double lmin_nz = ev[n - 1];
  for (int i = 0; i < n; ++i) {
    if (ev[i] <= kNullTol)
      ++below;
    else
      lmin_nz = std::min(lmin_nz, ev[i]);
  }
  if (below > 1)
    throw std::runtime_error("spectral_bounds: multiple null eigenvalues (disconnected graph)");
  return {ev[n - 1], lmin_nz, ev[n - 1] / lmin_nz};
}

Eigen::VectorXd apply_weight(const WeightMatrix& p, const Eigen::VectorXd& s,
                             int dim) {
  const int n = p.n();
  if (s.size() != static_cast<Eigen::Index>(n) * dim)
    throw std::invalid_argument("apply_weight: dimension mismatch");
  Eigen::VectorXd out(s.size());
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    for (int j : p.row_support()[i])
      acc += p.entries()(i, j) * s.segment(static_cast<Eigen::Index>(j) * dim, dim);
    out.segment(static_cast<Eigen::Index>(i) * dim, dim) = acc;
  }
  return out;
}

}  // namespace rpp
