#include "spord/graph.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "spord/rng.hpp"

namespace spord {

namespace {

std::vector<int> connected_component_sizes(const std::vector<std::vector<int>>& neighbors) {
  const int n = static_cast<int>(neighbors.size());
  std::vector<int> comp(n, -1);
  std::vector<int> sizes;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    const int c = static_cast<int>(sizes.size());
    sizes.push_back(0);
    stack.push_back(s);
    comp[s] = c;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      ++sizes[c];
      for (int w : neighbors[v]) {
        if (comp[w] < 0) {
          comp[w] = c;
          stack.push_back(w);
        }
      }
    }
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<int>());
  return sizes;
}

}  // namespace

AdjacencyGraph AdjacencyGraph::from_edges(int num_areas,
                                          const std::vector<std::pair<int, int>>& edge_list) {
  if (num_areas <= 0) throw std::invalid_argument("adjacency: number of areas must be positive");

  AdjacencyGraph g;
  g.num_areas = num_areas;
  g.neighbors.assign(num_areas, {});

  std::set<std::pair<int, int>> seen;
  for (auto [i, j] : edge_list) {
    if (i < 0 || j < 0 || i >= num_areas || j >= num_areas) {
      throw std::invalid_argument("adjacency: edge index out of range: " + std::to_string(i) +
                                  " " + std::to_string(j));
    }
    if (i == j) {
      throw std::invalid_argument("adjacency: self-loop on area " + std::to_string(i));
    }
    auto key = std::minmax(i, j);
    if (seen.insert(key).second) {
      g.neighbors[key.first].push_back(key.second);
      g.neighbors[key.second].push_back(key.first);
      g.edges.push_back(key);
    }
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  std::sort(g.edges.begin(), g.edges.end());

  g.degrees.resize(num_areas);
  for (int i = 0; i < num_areas; ++i) g.degrees[i] = static_cast<int>(g.neighbors[i].size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g.dense_laplacian(),
                                                        Eigen::EigenvaluesOnly);
  g.laplacian_eigenvalues = solver.eigenvalues();
  // Clear the numerical noise around the structural zero eigenvalues.
  for (int i = 0; i < g.laplacian_eigenvalues.size(); ++i) {
    if (std::abs(g.laplacian_eigenvalues[i]) < 1e-10) g.laplacian_eigenvalues[i] = 0.0;
  }

  g.component_sizes = connected_component_sizes(g.neighbors);
  if (g.component_sizes.size() > 1) {
    std::string sizes;
    for (size_t c = 0; c < g.component_sizes.size(); ++c) {
      if (c) sizes += ", ";
      sizes += std::to_string(g.component_sizes[c]);
    }
    std::fprintf(stderr, "warning: adjacency graph is disconnected (%zu components of sizes %s)\n",
                 g.component_sizes.size(), sizes.c_str());
  }
  if (const int islands = g.num_islands(); islands > 0) {
    std::fprintf(stderr, "note: %d area(s) have no neighbours; their CAR conditional is N(0, sigma^2/(1-rho))\n",
                 islands);
  }
  return g;
}

int AdjacencyGraph::num_islands() const {
  int n = 0;
  for (int d : degrees) n += (d == 0);
  return n;
}

double AdjacencyGraph::laplacian_quadform(const Eigen::VectorXd& theta) const {
  double q = 0.0;
  for (auto [i, j] : edges) {
    const double d = theta[i] - theta[j];
    q += d * d;
  }
  return q;
}

Eigen::MatrixXd AdjacencyGraph::dense_laplacian() const {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(num_areas, num_areas);
  for (int i = 0; i < num_areas; ++i) {
    r(i, i) = degrees[i];
    for (int j : neighbors[i]) r(i, j) = -1.0;
  }
  return r;
}

AdjacencyGraph load_adjacency(const std::string& path, int num_areas) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("adjacency: cannot open " + path);

  std::vector<std::pair<int, int>> directed;
  int declared = 0;
  int max_index = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long a = 0, b = 0;
    if (!(ls >> a)) continue;  // blank line
    if (!(ls >> b)) {
      // single-integer line: area count declaration
      if (declared > 0) {
        throw std::runtime_error("adjacency: duplicate area-count line at line " +
                                 std::to_string(lineno));
      }
      declared = static_cast<int>(a);
      if (declared <= 0) {
        throw std::runtime_error("adjacency: invalid area count at line " + std::to_string(lineno));
      }
      continue;
    }
    long long extra;
    if (ls >> extra) {
      throw std::runtime_error("adjacency: malformed line " + std::to_string(lineno) + ": '" +
                               line + "'");
    }
    directed.emplace_back(static_cast<int>(a), static_cast<int>(b));
    max_index = std::max<long long>(max_index, std::max(a, b));
  }

  int m = num_areas > 0 ? num_areas : (declared > 0 ? declared : max_index + 1);
  if (m <= 0) throw std::runtime_error("adjacency: no areas found in " + path);

  // Each undirected edge may appear once or twice; if twice, the two
  // occurrences must be the two orientations of the same pair.
  std::map<std::pair<int, int>, std::pair<int, int>> counts;  // key -> (fwd, rev)
  for (auto [i, j] : directed) {
    if (i == j) throw std::invalid_argument("adjacency: self-loop on area " + std::to_string(i));
    auto key = std::minmax(i, j);
    auto& c = counts[key];
    (i < j ? c.first : c.second) += 1;
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& [key, c] : counts) {
    const int total = c.first + c.second;
    if (total == 2 && (c.first == 2 || c.second == 2)) {
      throw std::invalid_argument("adjacency: edge " + std::to_string(key.first) + "-" +
                                  std::to_string(key.second) +
                                  " repeated in one orientation; expected the symmetric pair");
    }
    if (total > 2) {
      throw std::invalid_argument("adjacency: edge " + std::to_string(key.first) + "-" +
                                  std::to_string(key.second) + " listed more than twice");
    }
    edges.push_back(key);
  }
  return AdjacencyGraph::from_edges(m, edges);
}

void save_adjacency(const std::string& path, const AdjacencyGraph& graph) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("adjacency: cannot write " + path);
  out << "# adjacency edge list, 0-based indices\n";
  out << graph.num_areas << "\n";
  for (auto [i, j] : graph.edges) out << i << " " << j << "\n";
  if (!out) throw std::runtime_error("adjacency: write failed for " + path);
}

namespace {

void check_lcar_args(const Eigen::VectorXd& theta, double rho, double sigma2,
                     const AdjacencyGraph& graph) {
  if (theta.size() != graph.num_areas) {
    throw std::invalid_argument("lcar: theta has length " + std::to_string(theta.size()) +
                                ", expected " + std::to_string(graph.num_areas));
  }
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("lcar: rho must lie in (0, 1)");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("lcar: sigma2 must be positive");
}

}  // namespace

double lcar_logdensity(const Eigen::VectorXd& theta, double rho, double sigma2,
                       const AdjacencyGraph& graph) {
  check_lcar_args(theta, rho, sigma2, graph);
  const int m = graph.num_areas;
  double logdet_r = 0.0;  // log det of rho (D - W) + (1 - rho) I
  for (int i = 0; i < m; ++i) {
    logdet_r += std::log(rho * graph.laplacian_eigenvalues[i] + (1.0 - rho));
  }
  const double quad = rho * graph.laplacian_quadform(theta) + (1.0 - rho) * theta.squaredNorm();
  return -0.5 * m * std::log(2.0 * M_PI * sigma2) + 0.5 * logdet_r - quad / (2.0 * sigma2);
}

Eigen::VectorXd lcar_sample(double rho, double sigma2, const AdjacencyGraph& graph,
                            std::uint64_t seed) {
  check_lcar_args(Eigen::VectorXd::Zero(graph.num_areas), rho, sigma2, graph);
  const int m = graph.num_areas;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m + 2 * graph.edges.size());
  for (int i = 0; i < m; ++i) {
    trip.emplace_back(i, i, (rho * graph.degrees[i] + (1.0 - rho)) / sigma2);
  }
  for (auto [i, j] : graph.edges) {
    trip.emplace_back(i, j, -rho / sigma2);
    trip.emplace_back(j, i, -rho / sigma2);
  }
  Eigen::SparseMatrix<double> q(m, m);
  q.setFromTriplets(trip.begin(), trip.end());

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(q);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("lcar_sample: sparse Cholesky factorization failed");
  }

  Rng rng(seed);
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) z[i] = rng.normal();

  // P Q P^T = L L^T; x = P^T L^{-T} z has covariance Q^{-1}.
  Eigen::VectorXd u = llt.matrixU().solve(z);
  return llt.permutationPinv() * u;
}

}  // namespace spord
