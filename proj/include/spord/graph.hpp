#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace spord {

/// Areal adjacency structure with the eigendecomposition of the graph
/// Laplacian R = D - W cached for fast Leroux CAR density evaluation.
/// Immutable after construction and safe to share across chains.
struct AdjacencyGraph {
  int num_areas = 0;
  std::vector<std::vector<int>> neighbors;  // sorted adjacency lists
  std::vector<int> degrees;
  std::vector<std::pair<int, int>> edges;   // unique undirected edges, i < j
  Eigen::VectorXd laplacian_eigenvalues;    // ascending, one zero per component
  std::vector<int> component_sizes;         // connected components, descending size

  // Validates symmetry/self-loops/ranges, caches eigenvalues and components.
  static AdjacencyGraph from_edges(int num_areas,
                                   const std::vector<std::pair<int, int>>& edge_list);

  bool is_connected() const { return component_sizes.size() <= 1; }
  int num_islands() const;

  // theta' R theta = sum over edges (theta_i - theta_j)^2
  double laplacian_quadform(const Eigen::VectorXd& theta) const;

  // Dense R = D - W; intended for tests and small graphs.
  Eigen::MatrixXd dense_laplacian() const;
};

// Edge-list file: "i j" per line, 0-based, '#' comments. Each undirected edge
// may appear once (symmetrized) or twice (both orientations). An optional
// single-integer line declares the number of areas; otherwise max index + 1
// is used (pass num_areas > 0 to override, e.g. for trailing isolated areas).
AdjacencyGraph load_adjacency(const std::string& path, int num_areas = 0);

void save_adjacency(const std::string& path, const AdjacencyGraph& graph);

/// Log density of the Leroux CAR distribution with precision
/// Q = (1/sigma2) [rho (D - W) + (1 - rho) I], using the cached eigenvalues
/// for the determinant and sparse accumulation for the quadratic form.
double lcar_logdensity(const Eigen::VectorXd& theta, double rho, double sigma2,
                       const AdjacencyGraph& graph);

/// Exact draw from LCAR(sigma2, rho) via sparse Cholesky of Q.
/// Deterministic given the seed.
Eigen::VectorXd lcar_sample(double rho, double sigma2, const AdjacencyGraph& graph,
                            std::uint64_t seed);

}  // namespace spord
