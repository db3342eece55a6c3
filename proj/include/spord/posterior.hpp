#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spord/data.hpp"
#include "spord/sampler.hpp"

namespace spord {

/// Per (area, variable) posterior mean of theta_mk, the relevance
/// P(theta_mk < 0 | data) and central 95% quantiles.
struct ArealSummary {
  int num_areas = 0;
  int num_variables = 0;
  Eigen::MatrixXd theta_mean;  // M x K
  Eigen::MatrixXd relevance;   // M x K
  Eigen::MatrixXd q025, q975;  // M x K
};

ArealSummary areal_summaries(const PosteriorDraws& draws);

enum class CorrelationLevel { Areal, Individual };

struct CorrelationReport {
  CorrelationLevel level = CorrelationLevel::Areal;
  Eigen::MatrixXd mean;           // K x K, unit diagonal
  Eigen::MatrixXd lower, upper;   // 0.025 / 0.975 quantiles
  Eigen::MatrixXi excludes_zero;  // credible interval excludes zero
  int skipped_draws = 0;          // draws dropped for a zero diagonal entry
};

CorrelationReport correlation_report(const PosteriorDraws& draws, CorrelationLevel level);

struct PcaResult {
  Eigen::MatrixXd loadings;    // K x C, largest-|loading| entry positive
  Eigen::MatrixXd scores;      // M x C; scores * loadings^T reconstructs
  Eigen::VectorXd explained;   // C shares of total variance
  Eigen::VectorXd column_means;
};

/// Covariance PCA (via SVD) of the centered posterior-mean matrix; columns
/// are optionally standardized first.
PcaResult pca_of_spatial_means(const ArealSummary& summary, int num_components,
                               bool scale_columns = false);

struct PredictiveCell {
  int area = 0;      // 0-based
  int variable = 0;  // 0-based
  int category = 0;  // 1-based
  double mean_pct = 0.0;
  double q025 = 0.0, q975 = 0.0;
  double observed_pct = 0.0;
  bool covered = false;
  int n_respondents = 0;  // non-missing respondents behind the percentages
};

struct PredictiveReport {
  std::vector<PredictiveCell> cells;
};

/// Posterior-predictive simulation of each respondent's responses per draw,
/// aggregated to per-(area, variable, category) percentages. Restricted to
/// respondents with an observed response so predicted and observed
/// denominators match. Empty area_filter means all areas.
PredictiveReport posterior_predictive_areal(const PosteriorDraws& draws,
                                            const SurveyDataset& data,
                                            const std::vector<int>& area_filter,
                                            std::uint64_t seed);

struct PoststratRow {
  int area = 0;
  int variable = 0;
  int category = 0;  // 1-based
  double mean = 0.0;
  double q025 = 0.0, q975 = 0.0;
};

struct PoststratReport {
  std::vector<PoststratRow> rows;
};

/// Expected finite-population category proportions per area: the model cell
/// probabilities (individual effects at their zero prior mean) weighted by
/// the known population counts N_zm. population_counts is Z x M.
PoststratReport poststratify(const PosteriorDraws& draws,
                             const Eigen::MatrixXd& population_counts);

}  // namespace spord
