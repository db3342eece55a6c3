#include "spord/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spord/logistic.hpp"

namespace spord {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSimplexSumTol = 1e-9;

bool valid_simplex(const Eigen::VectorXd& delta) {
  if (delta.size() < 2) return false;
  if ((delta.array() <= 0.0).any()) return false;
  return std::abs(delta.sum() - 1.0) <= kSimplexSumTol;
}

bool strictly_increasing(const Eigen::VectorXd& v) {
  for (int j = 1; j < v.size(); ++j)
    if (!(v[j] > v[j - 1])) return false;
  return true;
}
}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Indep: return "indep";
    case Variant::Corr: return "corr";
    case Variant::CorrIRE: return "corr_ire";
  }
  return "?";
}

std::string to_string(CutpointMode m) {
  return m == CutpointMode::Shared ? "shared" : "per_cell";
}

Variant variant_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "indep") return Variant::Indep;
  if (t == "corr") return Variant::Corr;
  if (t == "corr_ire" || t == "corrire" || t == "corr&ire") return Variant::CorrIRE;
  throw std::invalid_argument("unknown model variant '" + s + "'");
}

CutpointMode cutpoint_mode_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "shared") return CutpointMode::Shared;
  if (t == "per_cell" || t == "percell") return CutpointMode::PerCell;
  throw std::invalid_argument("unknown cutpoint mode '" + s + "'");
}

Eigen::VectorXd cutpoints_from_simplex(const Eigen::VectorXd& delta) {
  if (!valid_simplex(delta)) throw std::invalid_argument("cutpoints: input is not a simplex");
  const int j_max = static_cast<int>(delta.size()) - 1;
  Eigen::VectorXd kappa(j_max);
  double cum = 0.0;
  for (int j = 0; j < j_max; ++j) {
    cum += delta[j];
    kappa[j] = logit(std::min(cum, 1.0 - 1e-16));
  }
  if (!strictly_increasing(kappa))
    throw std::invalid_argument("cutpoints: cumulative sums are not strictly increasing");
  return kappa;
}

CutpointBlock CutpointBlock::from_simplex(const Eigen::VectorXd& delta) {
  CutpointBlock b;
  b.simplex = delta;
  b.cutpoints = cutpoints_from_simplex(delta);
  return b;
}

void CutpointBlock::shift_cutpoints(double shift) {
  const int j_max = static_cast<int>(cutpoints.size());
  cutpoints.array() += shift;
  Eigen::VectorXd delta(j_max + 1);
  double prev = 0.0;
  for (int j = 0; j < j_max; ++j) {
    const double g = inv_logit(cutpoints[j]);
    delta[j] = g - prev;
    prev = g;
  }
  delta[j_max] = 1.0 - prev;
  // Guard against underflow in pathological shifts; the cut points above
  // remain the exact shifted values either way.
  if ((delta.array() < 1e-15).any()) {
    delta = delta.array().max(1e-15);
    delta /= delta.sum();
  }
  simplex = delta;
}

void ModelSpec::validate() const {
  if (num_categories < 2) throw std::invalid_argument("spec: J must be at least 2");
  if (num_variables < 1) throw std::invalid_argument("spec: K must be positive");
  if (num_cells < 1) throw std::invalid_argument("spec: Z must be positive");
  if (num_areas < 1) throw std::invalid_argument("spec: M must be positive");
  if (!(sigma_upper > 0.0)) throw std::invalid_argument("spec: sigma_upper must be positive");
  if (include_alpha && cutpoint_mode == CutpointMode::PerCell)
    throw std::invalid_argument(
        "spec: include_alpha and per-cell cut points are mutually exclusive");
}

Eigen::MatrixXd ParameterState::psi() const {
  if (ire_phi.size() == 0) return Eigen::MatrixXd();
  return ire_phi * ire_mixing;
}

Eigen::MatrixXd ParameterState::spatial_covariance(const ModelSpec& spec) const {
  if (spec.variant == Variant::Indep) {
    return sigma.array().square().matrix().asDiagonal();
  }
  return mixing.transpose() * mixing;
}

Eigen::MatrixXd ParameterState::individual_covariance() const {
  if (ire_mixing.size() == 0) return Eigen::MatrixXd();
  return ire_mixing.transpose() * ire_mixing;
}

void ParameterState::check_invariants(const ModelSpec& spec,
                                      const std::vector<int>& area_weights) const {
  const int k_vars = spec.num_variables;
  if (static_cast<int>(cutpoint_blocks.size()) != spec.num_cutpoint_blocks())
    throw std::runtime_error("state: wrong number of cut-point blocks");
  for (const auto& b : cutpoint_blocks) {
    if (!valid_simplex(b.simplex) || !strictly_increasing(b.cutpoints))
      throw std::runtime_error("state: invalid cut-point block");
  }
  if (phi.rows() != spec.num_areas || phi.cols() != k_vars)
    throw std::runtime_error("state: phi has wrong shape");
  double total_weight = 0.0;
  for (int w : area_weights) total_weight += w;
  if (total_weight > 0.0) {
    for (int k = 0; k < k_vars; ++k) {
      double s = 0.0;
      for (int m = 0; m < spec.num_areas; ++m) s += area_weights[m] * phi(m, k);
      if (std::abs(s) > 1e-9)
        throw std::runtime_error("state: weighted zero-sum violated for column " +
                                 std::to_string(k));
    }
  }
  for (int k = 0; k < k_vars; ++k)
    if (!(rho[k] > 0.0 && rho[k] < 1.0)) throw std::runtime_error("state: rho out of (0,1)");
  if (spec.variant == Variant::Indep) {
    for (int k = 0; k < k_vars; ++k)
      if (!(sigma[k] > 0.0 && sigma[k] <= spec.sigma_upper))
        throw std::runtime_error("state: sigma out of (0, sigma_upper]");
  } else {
    if (!(sigma_mix > 0.0 && sigma_mix <= spec.sigma_upper))
      throw std::runtime_error("state: sigma_M out of (0, sigma_upper]");
  }
  if (spec.variant == Variant::CorrIRE) {
    if (!(sigma_ire_mix > 0.0 && sigma_ire_mix <= spec.sigma_upper))
      throw std::runtime_error("state: sigma_Mt out of (0, sigma_upper]");
  }
  if (spec.include_alpha) {
    if (alpha.rows() != spec.num_cells || alpha.cols() != k_vars)
      throw std::runtime_error("state: alpha has wrong shape");
    if (alpha.row(0).cwiseAbs().maxCoeff() != 0.0)
      throw std::runtime_error("state: corner constraint alpha_{1k} = 0 violated");
  }
}

Eigen::VectorXd category_probs(double eta, const Eigen::VectorXd& cutpoints) {
  if (!strictly_increasing(cutpoints))
    throw std::invalid_argument("category_probs: cut points must be strictly increasing");
  const int j_max = static_cast<int>(cutpoints.size());
  Eigen::VectorXd pi(j_max + 1);
  double prev = 0.0;
  for (int j = 0; j < j_max; ++j) {
    const double g = inv_logit(cutpoints[j] + eta);
    pi[j] = std::max(g - prev, 0.0);
    prev = g;
  }
  pi[j_max] = std::max(1.0 - prev, 0.0);
  return pi;
}

double log_category_prob(int y, double eta, const Eigen::VectorXd& cutpoints) {
  const int j_count = static_cast<int>(cutpoints.size()) + 1;
  if (y < 1 || y > j_count) throw std::invalid_argument("log_category_prob: category out of range");
  if (y == 1) return log_inv_logit(cutpoints[0] + eta);
  if (y == j_count) return log_inv_logit(-(cutpoints[j_count - 2] + eta));
  return log_inv_logit_diff(cutpoints[y - 2] + eta, cutpoints[y - 1] + eta);
}

double linear_predictor(const ParameterState& state, const ModelSpec& spec,
                        const SurveyDataset& data, int respondent, int k) {
  if (respondent < 0 || respondent >= data.num_respondents || k < 0 || k >= spec.num_variables)
    throw std::out_of_range("linear_predictor: index out of range");
  const int m = data.area_index[respondent];
  double eta = state.phi.row(m).dot(state.mixing.col(k));
  if (spec.include_alpha) eta += state.alpha(data.cell_index[respondent], k);
  if (spec.variant == Variant::CorrIRE)
    eta += state.ire_phi.row(respondent).dot(state.ire_mixing.col(k));
  return eta;
}

LogLikResult loglik(const ParameterState& state, const ModelSpec& spec,
                    const SurveyDataset& data) {
  if (data.num_variables != spec.num_variables || data.num_areas != spec.num_areas ||
      data.num_cells != spec.num_cells || data.num_categories != spec.num_categories)
    throw std::invalid_argument("loglik: dataset dimensions do not match the model spec");
  const int n = data.num_respondents;
  const int k_vars = spec.num_variables;

  const Eigen::MatrixXd theta = state.theta();
  const Eigen::MatrixXd psi = state.psi();

  LogLikResult out;
  out.per_obs = Eigen::MatrixXd::Zero(n, k_vars);
  for (int i = 0; i < n; ++i) {
    const int m = data.area_index[i];
    const int z = data.cell_index[i];
    for (int k = 0; k < k_vars; ++k) {
      const int y = data.responses(i, k);
      if (y == kMissingResponse) continue;
      double eta = theta(m, k);
      if (spec.include_alpha) eta += state.alpha(z, k);
      if (psi.size() > 0) eta += psi(i, k);
      const auto& kappa = state.cutpoint_blocks[spec.block_index(z, k)].cutpoints;
      const double lp = log_category_prob(y, eta, kappa);
      out.per_obs(i, k) = lp;
      out.total += lp;
    }
  }
  return out;
}

double logprior(const ParameterState& state, const ModelSpec& spec, const AdjacencyGraph& graph) {
  const int k_vars = spec.num_variables;

  // Support checks first: anything outside returns the -inf sentinel.
  for (const auto& b : state.cutpoint_blocks) {
    if (!valid_simplex(b.simplex) || !strictly_increasing(b.cutpoints)) return kNegInf;
  }
  for (int k = 0; k < k_vars; ++k)
    if (!(state.rho[k] > 0.0 && state.rho[k] < 1.0)) return kNegInf;
  if (spec.variant == Variant::Indep) {
    for (int k = 0; k < k_vars; ++k)
      if (!(state.sigma[k] > 0.0 && state.sigma[k] <= spec.sigma_upper)) return kNegInf;
  } else {
    if (!(state.sigma_mix > 0.0 && state.sigma_mix <= spec.sigma_upper)) return kNegInf;
  }
  if (spec.variant == Variant::CorrIRE) {
    if (!(state.sigma_ire_mix > 0.0 && state.sigma_ire_mix <= spec.sigma_upper)) return kNegInf;
  }

  double lp = 0.0;
  for (int k = 0; k < k_vars; ++k) {
    const double s2 = spec.variant == Variant::Indep ? state.sigma[k] * state.sigma[k] : 1.0;
    lp += lcar_logdensity(state.phi.col(k), state.rho[k], s2, graph);
  }
  if (spec.variant != Variant::Indep) {
    const double v = state.sigma_mix * state.sigma_mix;
    lp += -0.5 * k_vars * k_vars * std::log(2.0 * M_PI * v) -
          state.mixing.squaredNorm() / (2.0 * v);
  }
  if (spec.variant == Variant::CorrIRE) {
    lp += -0.5 * state.ire_phi.size() * std::log(2.0 * M_PI) - 0.5 * state.ire_phi.squaredNorm();
    const double v = state.sigma_ire_mix * state.sigma_ire_mix;
    lp += -0.5 * k_vars * k_vars * std::log(2.0 * M_PI * v) -
          state.ire_mixing.squaredNorm() / (2.0 * v);
  }
  // Dirichlet(1) cut points, uniform rho and scale priors, flat alpha: all
  // contribute nothing beyond their support indicators.
  return lp;
}

double logposterior(const ParameterState& state, const ModelSpec& spec, const SurveyDataset& data,
                    const AdjacencyGraph& graph) {
  const double lp = logprior(state, spec, graph);
  if (lp == kNegInf) return kNegInf;
  return lp + loglik(state, spec, data).total;
}

void center_and_compensate(ParameterState& state, const ModelSpec& spec,
                           const std::vector<int>& area_weights) {
  const int k_vars = spec.num_variables;
  double total = 0.0;
  for (int w : area_weights) total += w;
  if (total <= 0.0) return;

  Eigen::VectorXd shift = Eigen::VectorXd::Zero(k_vars);
  // Two refinement passes drive the weighted sums to floating-point zero.
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd wmean(k_vars);
    for (int l = 0; l < k_vars; ++l) {
      double s = 0.0;
      for (int m = 0; m < spec.num_areas; ++m) s += area_weights[m] * state.phi(m, l);
      wmean[l] = s / total;
    }
    for (int l = 0; l < k_vars; ++l) state.phi.col(l).array() -= wmean[l];
    shift += state.mixing.transpose() * wmean;
  }
  for (int k = 0; k < k_vars; ++k) {
    if (shift[k] == 0.0) continue;
    if (spec.cutpoint_mode == CutpointMode::Shared) {
      state.cutpoint_blocks[k].shift_cutpoints(shift[k]);
    } else {
      for (int z = 0; z < spec.num_cells; ++z)
        state.cutpoint_blocks[spec.block_index(z, k)].shift_cutpoints(shift[k]);
    }
  }
}

}  // namespace spord
