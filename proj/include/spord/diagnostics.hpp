#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spord/sampler.hpp"

namespace spord {

/// Per-chain sequences of equal length for one scalar functional.
struct ScalarTrace {
  std::vector<std::vector<double>> chains;
};

/// Split potential-scale-reduction statistic. Returns +inf when chains have
/// zero within variance but unequal means; requires >= 2 chains of >= 10.
double gelman_rubin(const ScalarTrace& trace);

/// Autocorrelation-sum estimator with Geyer initial-positive-sequence
/// truncation, computed per chain and summed. Constant sequences yield 0.
double effective_sample_size(const ScalarTrace& trace);

struct WaicResult {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
  int n_obs = 0;
};

/// Widely applicable information criterion from a draws x observations
/// matrix of pointwise log-likelihoods; waic = -2 (lppd - p_waic).
WaicResult waic(const Eigen::MatrixXd& loglik_draws);

struct DiagnosticRow {
  std::string functional;
  double rhat = 0.0;  // NaN when undefined (single chain)
  double ess = 0.0;
  bool pass = false;
};

struct DiagnosticReport {
  std::vector<DiagnosticRow> rows;
  bool all_pass = false;
  double rhat_threshold = 1.10;
  double ess_threshold = 100.0;
};

/// Convergence gates over the identifiable functionals: all cut points,
/// Sigma_b and Sigma_b-tilde entries, theta_mk levels, rho and scale
/// parameters. Raw phi / mixing entries are excluded (rotation invariance
/// makes their chains incomparable).
DiagnosticReport convergence_report(const PosteriorDraws& draws);

/// Assembles the draws x observations log-likelihood matrix of an archive.
Eigen::MatrixXd loglik_matrix(const PosteriorDraws& draws);

}  // namespace spord
