#include "spord/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "spord/rng.hpp"

namespace spord {

AdjacencyGraph grid_graph(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid_graph: dimensions must be positive");
  std::vector<std::pair<int, int>> edges;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c));
    }
  }
  return AdjacencyGraph::from_edges(rows * cols, edges);
}

SyntheticData generate_dataset(const TrueParameters& truth, const ModelSpec& spec,
                               const AdjacencyGraph& graph, std::uint64_t seed) {
  spec.validate();
  const int k_vars = spec.num_variables;
  const int m_areas = spec.num_areas;
  const int j_cats = spec.num_categories;
  if (graph.num_areas != m_areas)
    throw std::invalid_argument("generate_dataset: graph size does not match spec");
  if (truth.cell_probs.size() != spec.num_cells ||
      std::abs(truth.cell_probs.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("generate_dataset: cell probabilities must form a simplex of length Z");
  if (static_cast<int>(truth.area_sample_sizes.size()) != m_areas)
    throw std::invalid_argument("generate_dataset: area sample sizes must have length M");

  SyntheticData out;
  out.truth = truth.state;
  ParameterState& state = out.truth;

  if (static_cast<int>(state.cutpoint_blocks.size()) != spec.num_cutpoint_blocks())
    throw std::invalid_argument("generate_dataset: wrong number of cut-point blocks");
  if (state.rho.size() != k_vars)
    throw std::invalid_argument("generate_dataset: rho must have length K");

  Rng rng(splitmix64(seed) ^ 0xd1f7a1c3u);

  // Draw the spatial fields from their LCAR prior when not supplied.
  if (state.phi.size() == 0) {
    state.phi.resize(m_areas, k_vars);
    for (int k = 0; k < k_vars; ++k) {
      const double s2 =
          spec.variant == Variant::Indep ? state.sigma[k] * state.sigma[k] : 1.0;
      state.phi.col(k) = lcar_sample(state.rho[k], s2, graph, rng.next_u64());
    }
  }
  if (spec.variant == Variant::Indep) {
    state.mixing = Eigen::MatrixXd::Identity(k_vars, k_vars);
  }

  const int n = [&] {
    int t = 0;
    for (int c : truth.area_sample_sizes) {
      if (c < 0) throw std::invalid_argument("generate_dataset: negative area sample size");
      t += c;
    }
    return t;
  }();

  SurveyDataset& d = out.data;
  d.num_respondents = n;
  d.num_variables = k_vars;
  d.num_categories = j_cats;
  d.num_cells = spec.num_cells;
  d.num_areas = m_areas;
  d.responses.resize(n, k_vars);
  d.cell_index.resize(n);
  d.area_index.resize(n);
  {
    int i = 0;
    for (int m = 0; m < m_areas; ++m)
      for (int c = 0; c < truth.area_sample_sizes[m]; ++c) d.area_index[i++] = m;
  }
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double cum = 0.0;
    int z = spec.num_cells - 1;
    for (int c = 0; c < spec.num_cells; ++c) {
      cum += truth.cell_probs[c];
      if (u <= cum) {
        z = c;
        break;
      }
    }
    d.cell_index[i] = z;
  }

  // Individual random effects.
  if (spec.variant == Variant::CorrIRE) {
    if (state.ire_mixing.rows() != k_vars || state.ire_mixing.cols() != k_vars)
      throw std::invalid_argument("generate_dataset: ire_mixing must be K x K");
    state.ire_phi.resize(n, k_vars);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < k_vars; ++k) state.ire_phi(i, k) = rng.normal();
  }

  // Express the truth in the identified parameterization before sampling
  // responses; the compensation leaves all response probabilities unchanged.
  center_and_compensate(state, spec, truth.area_sample_sizes);

  out.theta = state.theta();
  out.psi = state.psi();

  for (int i = 0; i < n; ++i) {
    const int m = d.area_index[i];
    const int z = d.cell_index[i];
    for (int k = 0; k < k_vars; ++k) {
      double eta = out.theta(m, k);
      if (spec.include_alpha) eta += state.alpha(z, k);
      if (out.psi.size() > 0) eta += out.psi(i, k);
      const auto& kappa = state.cutpoint_blocks[spec.block_index(z, k)].cutpoints;
      const Eigen::VectorXd pi = category_probs(eta, kappa);
      const double u = rng.uniform();
      double cum = 0.0;
      int y = j_cats;
      for (int j = 0; j < j_cats; ++j) {
        cum += pi[j];
        if (u <= cum) {
          y = j + 1;
          break;
        }
      }
      d.responses(i, k) = y;
    }
  }
  d.finalize_and_validate();
  return out;
}

}  // namespace spord
