#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rpp {

/// Undirected communication graph. Edges are stored as (i, j) with i < j.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::array<double, 2>> coords;  // empty unless geometric
  std::int64_t seed_used = -1;                // final seed after re-sampling

  std::vector<std::vector<int>> adjacency() const;
  bool is_connected() const;

  /// Edge-list text: "n m", then one "i j" line per edge, then (if present)
  /// n lines "i x y" with the node coordinates.
  std::string to_edge_list() const;
  static Graph from_edge_list(const std::string& text);
};

Graph generate_geometric_graph(int n, double radius, std::uint64_t seed);
Graph complete_graph(int n);
Graph path_graph(int n);

enum class WeightScheme { normalized_laplacian, metropolis };

struct SpectralBounds {
  double lambda_max = 0;
  double lambda_min_nonzero = 0;
  double eigengap = 1;  // lambda_max / lambda_min_nonzero
};

/// Symmetric PSD neighbor-sparse mixing matrix P, normalised to
/// lambda_max = 1, with Null(P) = span(1). Carries its full symmetric
/// eigendecomposition so spectral queries and polynomial operators are cheap.
class WeightMatrix {
 public:
  /// Empty placeholder; valid instances come from the factories below.
  WeightMatrix() = default;

  static WeightMatrix from_graph(const Graph& g, WeightScheme scheme);

  /// Wraps an already-assembled operator (e.g. a normalised polynomial of a
  /// graph matrix). Checks symmetry, PSD, the consensus null space and
  /// lambda_max = 1, but not neighbor sparsity.
  static WeightMatrix from_dense(Eigen::MatrixXd entries);

  int n() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const SpectralBounds& spectral() const { return spectral_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }  // ascending
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  /// Per-row structural support (neighbors plus the diagonal), ascending.
  const std::vector<std::vector<int>>& row_support() const { return support_; }

 private:
  void finalize(bool check_sparsity, const Graph* g);

  Eigen::MatrixXd entries_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  SpectralBounds spectral_;
  std::vector<std::vector<int>> support_;
};

/// Full symmetric eigendecomposition of P; fails if more than one eigenvalue
/// lies below the 1e-9 null-space tolerance (disconnected graph).
SpectralBounds spectral_bounds(const WeightMatrix& p);

/// (P (x) I_dim) s computed block-wise from the neighbor structure only,
/// with fixed ascending-j summation per row.
Eigen::VectorXd apply_weight(const WeightMatrix& p, const Eigen::VectorXd& s,
                             int dim);

}  // namespace rpp
