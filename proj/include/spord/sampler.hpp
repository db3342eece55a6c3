#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spord/data.hpp"
#include "spord/graph.hpp"
#include "spord/model.hpp"
#include "spord/rng.hpp"

namespace spord {

struct SamplerConfig {
  int num_chains = 5;
  int iterations_per_chain = 8000;
  int burn_in = 2000;
  int thin = 30;
  std::uint64_t seed = 1;
  double target_acceptance = 0.44;        // scalar and small-block updates
  double target_acceptance_block = 0.234; // blocks of dimension >= 5
  bool adapt_during_burnin_only = true;

  int saved_per_chain() const { return (iterations_per_chain - burn_in) / thin; }
  void validate() const;
};

struct SavedDraw {
  int chain = 0;
  int iteration = 0;  // 1-based within-chain iteration at save time
  ParameterState state;
  Eigen::MatrixXd theta;        // M x K
  Eigen::MatrixXd sigma_b;      // K x K spatial covariance
  Eigen::MatrixXd sigma_b_ire;  // K x K individual covariance, or 0x0
  Eigen::VectorXd loglik_obs;   // per observed (i,k) pair, flattened
  double logpost = 0.0;
};

struct ChainResult {
  int chain_id = 0;
  std::vector<SavedDraw> draws;
  std::map<std::string, double> acceptance_rates;       // post-burn-in, by update type
  std::map<std::string, double> scales_at_burnin_end;   // adapted proposal scales
  std::map<std::string, double> final_scales;
};

/// Thinned multi-chain archive of saved states plus derived quantities.
struct PosteriorDraws {
  ModelSpec spec;
  SamplerConfig config;
  std::vector<std::pair<int, int>> obs_index;  // flattened (respondent, variable) pairs
  std::vector<SavedDraw> draws;                // chain-major order
  std::vector<std::map<std::string, double>> acceptance_rates;  // per chain

  int num_chains() const { return config.num_chains; }
  int draws_per_chain() const { return config.saved_per_chain(); }
};

// Flattened index of non-missing (respondent, variable) pairs, row-major.
std::vector<std::pair<int, int>> observed_pairs(const SurveyDataset& data);

/// Starting point: empirical cut points (per cell in PerCell mode, shrunk
/// toward the per-variable global for sparse cells), small centered spatial
/// noise, mixing matrices at 0.1 I, rho at 0.5, scales at 1.
ParameterState initialize_state(const ModelSpec& spec, const SurveyDataset& data,
                                const AdjacencyGraph& graph, Rng& rng);

/// One adaptive Metropolis-within-Gibbs chain; deterministic given
/// (config.seed, chain_id).
ChainResult run_chain(const ModelSpec& spec, const SurveyDataset& data,
                      const AdjacencyGraph& graph, const SamplerConfig& config, int chain_id);

/// Runs all chains concurrently on independent seed streams and merges the
/// archives in chain order.
PosteriorDraws run_chains(const ModelSpec& spec, const SurveyDataset& data,
                          const AdjacencyGraph& graph, const SamplerConfig& config);

}  // namespace spord
