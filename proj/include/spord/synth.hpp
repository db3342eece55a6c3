#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spord/data.hpp"
#include "spord/graph.hpp"
#include "spord/model.hpp"

namespace spord {

/// Rook-adjacency lattice of rows x cols areas.
AdjacencyGraph grid_graph(int rows, int cols);

/// Generating parameters plus the sampling design. If `state.phi` is empty
/// the spatial fields are drawn from their LCAR prior.
struct TrueParameters {
  ParameterState state;
  Eigen::VectorXd cell_probs;           // Z, cell assignment probabilities
  std::vector<int> area_sample_sizes;   // M, respondents drawn per area
};

struct SyntheticData {
  SurveyDataset data;
  ParameterState truth;     // realized parameters in the identified (centered) form
  Eigen::MatrixXd theta;    // realized M x K spatial levels
  Eigen::MatrixXd psi;      // realized n x K individual levels (CorrIRE)
};

/// Forward simulation of the generative model; deterministic given the seed.
/// The realized latents are centered with cut-point compensation exactly as
/// the sampler does, so recovery comparisons are well-posed.
SyntheticData generate_dataset(const TrueParameters& truth, const ModelSpec& spec,
                               const AdjacencyGraph& graph, std::uint64_t seed);

}  // namespace spord
