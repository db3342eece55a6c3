#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spord/data.hpp"
#include "spord/graph.hpp"

namespace spord {

enum class Variant { Indep, Corr, CorrIRE };
enum class CutpointMode { Shared, PerCell };

std::string to_string(Variant v);
std::string to_string(CutpointMode m);
Variant variant_from_string(const std::string& s);
CutpointMode cutpoint_mode_from_string(const std::string& s);

/// kappa_j = logit(sum_{r<=j} delta_r), strictly increasing.
Eigen::VectorXd cutpoints_from_simplex(const Eigen::VectorXd& delta);

/// One ordered-intercept block: a simplex over the J categories and the
/// J-1 cut points derived from its cumulative sums.
struct CutpointBlock {
  Eigen::VectorXd simplex;    // length J, positive, sums to 1
  Eigen::VectorXd cutpoints;  // length J-1, strictly increasing

  static CutpointBlock from_simplex(const Eigen::VectorXd& delta);
  // Rebuilds the simplex from shifted cut points kappa_j + shift.
  void shift_cutpoints(double shift);
};

struct ModelSpec {
  Variant variant = Variant::Corr;
  CutpointMode cutpoint_mode = CutpointMode::Shared;
  bool include_alpha = false;
  double sigma_upper = 100.0;
  int num_categories = 0;  // J
  int num_variables = 0;   // K
  int num_cells = 0;       // Z
  int num_areas = 0;       // M

  void validate() const;
  int num_cutpoint_blocks() const {
    return cutpoint_mode == CutpointMode::Shared ? num_variables : num_cells * num_variables;
  }
  // Block layout: Shared -> k; PerCell -> z * K + k.
  int block_index(int cell, int k) const {
    return cutpoint_mode == CutpointMode::Shared ? k : cell * num_variables + k;
  }
};

/// One full point in parameter space. Variant conventions:
///   Indep   - phi holds the theta columns directly, mixing is pinned to the
///             identity and sigma holds the K LCAR scales;
///   Corr    - phi is unit-scale, mixing is free with N(0, sigma_mix^2) entries;
///   CorrIRE - adds per-respondent ire_phi (unit normal) and ire_mixing.
struct ParameterState {
  std::vector<CutpointBlock> cutpoint_blocks;
  Eigen::MatrixXd alpha;       // Z x K with row 0 fixed to zero, or 0x0
  Eigen::MatrixXd phi;         // M x K
  Eigen::MatrixXd mixing;      // K x K
  Eigen::VectorXd rho;         // K, each in (0,1)
  Eigen::VectorXd sigma;       // K (Indep) or empty
  double sigma_mix = 1.0;      // sigma_M
  Eigen::MatrixXd ire_phi;     // n x K (CorrIRE) or 0x0
  Eigen::MatrixXd ire_mixing;  // K x K (CorrIRE) or 0x0
  double sigma_ire_mix = 1.0;  // sigma_M-tilde

  Eigen::MatrixXd theta() const { return phi * mixing; }
  Eigen::MatrixXd psi() const;  // n x K, empty unless CorrIRE

  // Between-variable covariance of the spatial patterns: M^T M, or
  // diag(sigma_k^2) under the Indep embedding.
  Eigen::MatrixXd spatial_covariance(const ModelSpec& spec) const;
  Eigen::MatrixXd individual_covariance() const;  // Mt^T Mt

  // Throws unless all structural invariants hold (weighted zero-sum within
  // 1e-9, rho in (0,1), scales in (0, sigma_upper], cut points increasing).
  void check_invariants(const ModelSpec& spec, const std::vector<int>& area_weights) const;
};

/// pi_j = inv_logit(kappa_j + eta) - inv_logit(kappa_{j-1} + eta); sums to 1.
Eigen::VectorXd category_probs(double eta, const Eigen::VectorXd& cutpoints);

/// log pi_y computed on the log scale (stable for extreme eta).
double log_category_prob(int y, double eta, const Eigen::VectorXd& cutpoints);

/// Cut-point-free part of the linear predictor for respondent i, variable k:
/// alpha_{z_i k} + theta_{m_i k} + psi_{i k}.
double linear_predictor(const ParameterState& state, const ModelSpec& spec,
                        const SurveyDataset& data, int respondent, int k);

struct LogLikResult {
  double total = 0.0;
  Eigen::MatrixXd per_obs;  // n x K, log p(y_ik); 0 where missing
};

LogLikResult loglik(const ParameterState& state, const ModelSpec& spec,
                    const SurveyDataset& data);

/// Joint log prior; -infinity when outside the support. The Dirichlet(1)
/// cut-point prior contributes only its support indicator; the log-ratio
/// change-of-variable term belongs to the sampler.
double logprior(const ParameterState& state, const ModelSpec& spec, const AdjacencyGraph& graph);

double logposterior(const ParameterState& state, const ModelSpec& spec, const SurveyDataset& data,
                    const AdjacencyGraph& graph);

/// Weighted-mean centering of the phi columns with the compensating shift of
/// every cut-point block, leaving all likelihood terms unchanged. Weights are
/// the per-area respondent counts; a zero total weight is a no-op.
void center_and_compensate(ParameterState& state, const ModelSpec& spec,
                           const std::vector<int>& area_weights);

}  // namespace spord
