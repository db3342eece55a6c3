#include "spord/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "spord/logistic.hpp"

namespace spord {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Robbins-Monro adaptation of a proposal scale on the log scale.
class StepTuner {
 public:
  StepTuner() = default;
  StepTuner(double initial_step, double target)
      : log_step_(std::log(initial_step)), target_(target) {}

  double step() const { return std::exp(log_step_); }

  void observe(double accept_prob) {
    ++count_;
    log_step_ += (accept_prob - target_) / std::pow(static_cast<double>(count_), 0.7);
    log_step_ = std::clamp(log_step_, -12.0, 6.0);
  }

 private:
  double log_step_ = 0.0;
  double target_ = 0.44;
  long count_ = 0;
};

struct AcceptCounter {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0; }
};

class ChainRunner {
 public:
  ChainRunner(const ModelSpec& spec, const SurveyDataset& data, const AdjacencyGraph& graph,
              const SamplerConfig& cfg, int chain_id)
      : spec_(spec),
        data_(data),
        graph_(graph),
        cfg_(cfg),
        chain_id_(chain_id),
        rng_(Rng::for_chain(cfg.seed, chain_id)) {
    const int n = data.num_respondents;
    area_resp_.assign(spec.num_areas, {});
    cell_resp_.assign(spec.num_cells, {});
    for (int i = 0; i < n; ++i) {
      area_resp_[data.area_index[i]].push_back(i);
      cell_resp_[data.cell_index[i]].push_back(i);
    }
    const double block_target = spec.num_categories - 1 >= 5 ? cfg.target_acceptance_block
                                                             : cfg.target_acceptance;
    delta_tuners_.assign(spec.num_cutpoint_blocks(), StepTuner(0.2, block_target));
    if (spec.include_alpha)
      alpha_tuners_.assign(spec.num_cells * spec.num_variables, StepTuner(0.5, cfg.target_acceptance));
    phi_tuners_.assign(spec.num_variables, StepTuner(0.5, cfg.target_acceptance));
    rho_tuners_.assign(spec.num_variables, StepTuner(1.0, cfg.target_acceptance));
    if (spec.variant == Variant::Indep) {
      sigma_tuners_.assign(spec.num_variables, StepTuner(0.5, cfg.target_acceptance));
    } else {
      mix_tuners_.assign(spec.num_variables * spec.num_variables,
                         StepTuner(0.2, cfg.target_acceptance));
      sigma_tuners_.assign(1, StepTuner(0.5, cfg.target_acceptance));
    }
    if (spec.variant == Variant::CorrIRE) {
      const double row_target =
          spec.num_variables >= 5 ? cfg.target_acceptance_block : cfg.target_acceptance;
      ire_row_tuner_ = StepTuner(0.5, row_target);
      ire_mix_tuners_.assign(spec.num_variables * spec.num_variables,
                             StepTuner(0.2, cfg.target_acceptance));
      sigma_ire_tuner_ = StepTuner(0.5, cfg.target_acceptance);
    }
  }

  ChainResult run() {
    initialize();
    ChainResult result;
    result.chain_id = chain_id_;
    result.draws.reserve(cfg_.saved_per_chain());
    for (int t = 1; t <= cfg_.iterations_per_chain; ++t) {
      adapting_ = !cfg_.adapt_during_burnin_only || t <= cfg_.burn_in;
      counting_ = t > cfg_.burn_in;
      sweep();
      if (t == cfg_.burn_in) result.scales_at_burnin_end = scale_snapshot();
      if (t > cfg_.burn_in && (t - cfg_.burn_in) % cfg_.thin == 0) {
        result.draws.push_back(save_draw(t));
      }
    }
    result.final_scales = scale_snapshot();
    for (const auto& [name, counter] : counters_) result.acceptance_rates[name] = counter.rate();
    return result;
  }

 private:
  // ---- state and caches -------------------------------------------------
  const ModelSpec& spec_;
  const SurveyDataset& data_;
  const AdjacencyGraph& graph_;
  SamplerConfig cfg_;
  int chain_id_;
  Rng rng_;

  ParameterState state_;
  Eigen::MatrixXd theta_;  // M x K
  Eigen::MatrixXd psi_;    // n x K or 0x0
  Eigen::MatrixXd ll_;     // n x K cached log-lik, 0 at missing

  std::vector<std::vector<int>> area_resp_;
  std::vector<std::vector<int>> cell_resp_;

  std::vector<StepTuner> delta_tuners_;
  std::vector<StepTuner> alpha_tuners_;
  std::vector<StepTuner> phi_tuners_;
  std::vector<StepTuner> mix_tuners_;
  std::vector<StepTuner> rho_tuners_;
  std::vector<StepTuner> sigma_tuners_;
  StepTuner ire_row_tuner_;
  std::vector<StepTuner> ire_mix_tuners_;
  StepTuner sigma_ire_tuner_;

  std::map<std::string, AcceptCounter> counters_;
  bool adapting_ = true;
  bool counting_ = false;

  // ---- helpers ----------------------------------------------------------
  void count(const std::string& name, bool accepted) {
    if (!counting_) return;
    auto& c = counters_[name];
    ++c.proposed;
    c.accepted += accepted;
  }

  bool metropolis_accept(double log_ratio) {
    if (log_ratio >= 0.0) return true;
    if (log_ratio == kNegInf) return false;
    return std::log(rng_.uniform()) < log_ratio;
  }

  double obs_eta(int i, int k) const {
    double eta = theta_(data_.area_index[i], k);
    if (spec_.include_alpha) eta += state_.alpha(data_.cell_index[i], k);
    if (psi_.size() > 0) eta += psi_(i, k);
    return eta;
  }

  double obs_ll(int i, int k, double eta, const Eigen::VectorXd& kappa) const {
    return log_category_prob(data_.responses(i, k), eta, kappa);
  }

  const Eigen::VectorXd& block_kappa(int i, int k) const {
    return state_.cutpoint_blocks[spec_.block_index(data_.cell_index[i], k)].cutpoints;
  }

  void initialize() {
    for (int attempt = 0; attempt < 100; ++attempt) {
      state_ = initialize_state(spec_, data_, graph_, rng_);
      theta_ = state_.theta();
      psi_ = state_.psi();
      const double lp = logprior(state_, spec_, graph_);
      if (lp == kNegInf) continue;
      auto lik = loglik(state_, spec_, data_);
      if (!std::isfinite(lik.total)) continue;
      ll_ = std::move(lik.per_obs);
      return;
    }
    throw std::runtime_error("sampler: no finite log-posterior after 100 initialization attempts");
  }

  std::map<std::string, double> scale_snapshot() const {
    std::map<std::string, double> s;
    for (size_t b = 0; b < delta_tuners_.size(); ++b)
      s["delta[" + std::to_string(b) + "]"] = delta_tuners_[b].step();
    for (size_t i = 0; i < alpha_tuners_.size(); ++i)
      s["alpha[" + std::to_string(i) + "]"] = alpha_tuners_[i].step();
    for (size_t k = 0; k < phi_tuners_.size(); ++k)
      s["phi_col[" + std::to_string(k) + "]"] = phi_tuners_[k].step();
    for (size_t i = 0; i < mix_tuners_.size(); ++i)
      s["mixing[" + std::to_string(i) + "]"] = mix_tuners_[i].step();
    for (size_t k = 0; k < rho_tuners_.size(); ++k)
      s["rho[" + std::to_string(k) + "]"] = rho_tuners_[k].step();
    for (size_t k = 0; k < sigma_tuners_.size(); ++k)
      s["sigma[" + std::to_string(k) + "]"] = sigma_tuners_[k].step();
    if (spec_.variant == Variant::CorrIRE) {
      s["ire_rows"] = ire_row_tuner_.step();
      for (size_t i = 0; i < ire_mix_tuners_.size(); ++i)
        s["ire_mixing[" + std::to_string(i) + "]"] = ire_mix_tuners_[i].step();
      s["sigma_ire"] = sigma_ire_tuner_.step();
    }
    return s;
  }

  // ---- sweep ------------------------------------------------------------
  void sweep() {
    update_delta_blocks();
    if (spec_.include_alpha) update_alpha();
    update_phi();
    if (spec_.variant != Variant::Indep) update_mixing();
    update_rho();
    update_scales();
    if (spec_.variant == Variant::CorrIRE) {
      update_ire_rows();
      update_ire_mixing();
      update_sigma_ire();
    }
    center_and_compensate(state_, spec_, data_.area_sample_sizes);
    theta_ = state_.phi * state_.mixing;
  }

  // (1) blocked random-walk on additive log-ratio coordinates.
  void update_delta_blocks() {
    const int j_cats = spec_.num_categories;
    for (int b = 0; b < spec_.num_cutpoint_blocks(); ++b) {
      const int k = spec_.cutpoint_mode == CutpointMode::Shared ? b : b % spec_.num_variables;
      const int cell = spec_.cutpoint_mode == CutpointMode::Shared ? -1 : b / spec_.num_variables;
      const auto& delta = state_.cutpoint_blocks[b].simplex;

      const double step = delta_tuners_[b].step();
      Eigen::VectorXd v(j_cats - 1);
      for (int j = 0; j < j_cats - 1; ++j)
        v[j] = std::log(delta[j] / delta[j_cats - 1]) + step * rng_.normal();

      // Softmax with the last category as reference.
      const double vmax = std::max(0.0, v.maxCoeff());
      Eigen::VectorXd delta_new(j_cats);
      double denom = std::exp(-vmax);
      for (int j = 0; j < j_cats - 1; ++j) {
        delta_new[j] = std::exp(v[j] - vmax);
        denom += delta_new[j];
      }
      delta_new[j_cats - 1] = std::exp(-vmax);
      delta_new /= denom;

      double accept_prob = 0.0;
      if ((delta_new.array() > 1e-14).all()) {
        const Eigen::VectorXd kappa_new = cutpoints_from_simplex(delta_new);
        double d_ll = 0.0;
        const auto& members = cell >= 0 ? cell_resp_[cell] : all_respondents();
        for (int i : members) {
          if (data_.is_missing(i, k)) continue;
          d_ll += obs_ll(i, k, obs_eta(i, k), kappa_new) - ll_(i, k);
        }
        const double d_jacobian =
            delta_new.array().log().sum() - delta.array().log().sum();
        const double log_ratio = d_ll + d_jacobian;
        accept_prob = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
        if (metropolis_accept(log_ratio)) {
          state_.cutpoint_blocks[b].simplex = delta_new;
          state_.cutpoint_blocks[b].cutpoints = kappa_new;
          for (int i : members) {
            if (data_.is_missing(i, k)) continue;
            ll_(i, k) = obs_ll(i, k, obs_eta(i, k), kappa_new);
          }
          count("delta_block", true);
        } else {
          count("delta_block", false);
        }
      } else {
        count("delta_block", false);
      }
      if (adapting_) delta_tuners_[b].observe(accept_prob);
    }
  }

  const std::vector<int>& all_respondents() {
    if (all_resp_.empty() && data_.num_respondents > 0) {
      all_resp_.resize(data_.num_respondents);
      for (int i = 0; i < data_.num_respondents; ++i) all_resp_[i] = i;
    }
    return all_resp_;
  }
  std::vector<int> all_resp_;

  // (2) scalar random walk on the free cell effects.
  void update_alpha() {
    for (int z = 1; z < spec_.num_cells; ++z) {
      for (int k = 0; k < spec_.num_variables; ++k) {
        StepTuner& tuner = alpha_tuners_[z * spec_.num_variables + k];
        const double d = tuner.step() * rng_.normal();
        double d_ll = 0.0;
        for (int i : cell_resp_[z]) {
          if (data_.is_missing(i, k)) continue;
          d_ll += obs_ll(i, k, obs_eta(i, k) + d, block_kappa(i, k)) - ll_(i, k);
        }
        const double accept_prob = std::min(1.0, std::exp(std::min(d_ll, 0.0)));
        if (metropolis_accept(d_ll)) {
          state_.alpha(z, k) += d;
          for (int i : cell_resp_[z]) {
            if (data_.is_missing(i, k)) continue;
            ll_(i, k) = obs_ll(i, k, obs_eta(i, k), block_kappa(i, k));
          }
          count("alpha", true);
        } else {
          count("alpha", false);
        }
        if (adapting_) tuner.observe(accept_prob);
      }
    }
  }

  // (3) single-site random walk over each latent spatial column.
  void update_phi() {
    const int k_vars = spec_.num_variables;
    for (int col = 0; col < k_vars; ++col) {
      const double step = phi_tuners_[col].step();
      const double s2 = spec_.variant == Variant::Indep
                            ? state_.sigma[col] * state_.sigma[col]
                            : 1.0;
      double mean_accept = 0.0;
      for (int m = 0; m < spec_.num_areas; ++m) {
        const double d = step * rng_.normal();
        const double phi_old = state_.phi(m, col);
        const double phi_new = phi_old + d;

        // LCAR prior change for coordinate m of this column.
        double d_quad_r = 0.0;
        for (int j : graph_.neighbors[m]) {
          const double nj = state_.phi(j, col);
          d_quad_r += (phi_new - nj) * (phi_new - nj) - (phi_old - nj) * (phi_old - nj);
        }
        const double d_quad_i = phi_new * phi_new - phi_old * phi_old;
        double log_ratio =
            -(state_.rho[col] * d_quad_r + (1.0 - state_.rho[col]) * d_quad_i) / (2.0 * s2);

        double d_ll = 0.0;
        for (int k = 0; k < k_vars; ++k) {
          const double w = state_.mixing(col, k);
          if (w == 0.0) continue;
          for (int i : area_resp_[m]) {
            if (data_.is_missing(i, k)) continue;
            d_ll += obs_ll(i, k, obs_eta(i, k) + d * w, block_kappa(i, k)) - ll_(i, k);
          }
        }
        log_ratio += d_ll;
        mean_accept += std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
        if (metropolis_accept(log_ratio)) {
          state_.phi(m, col) = phi_new;
          for (int k = 0; k < k_vars; ++k) {
            const double w = state_.mixing(col, k);
            if (w == 0.0) continue;
            theta_(m, k) += d * w;
            for (int i : area_resp_[m]) {
              if (data_.is_missing(i, k)) continue;
              ll_(i, k) = obs_ll(i, k, obs_eta(i, k), block_kappa(i, k));
            }
          }
          count("phi", true);
        } else {
          count("phi", false);
        }
      }
      if (adapting_ && spec_.num_areas > 0)
        phi_tuners_[col].observe(mean_accept / spec_.num_areas);
    }
  }

  // (4) scalar random walk on the mixing matrix entries.
  void update_mixing() {
    const int k_vars = spec_.num_variables;
    const double var_m = state_.sigma_mix * state_.sigma_mix;
    for (int l = 0; l < k_vars; ++l) {
      for (int k = 0; k < k_vars; ++k) {
        StepTuner& tuner = mix_tuners_[l * k_vars + k];
        const double d = tuner.step() * rng_.normal();
        const double m_old = state_.mixing(l, k);
        const double m_new = m_old + d;
        double log_ratio = -(m_new * m_new - m_old * m_old) / (2.0 * var_m);
        for (int i = 0; i < data_.num_respondents; ++i) {
          if (data_.is_missing(i, k)) continue;
          const double d_eta = d * state_.phi(data_.area_index[i], l);
          log_ratio += obs_ll(i, k, obs_eta(i, k) + d_eta, block_kappa(i, k)) - ll_(i, k);
        }
        const double accept_prob = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
        if (metropolis_accept(log_ratio)) {
          state_.mixing(l, k) = m_new;
          theta_.col(k) += d * state_.phi.col(l);
          for (int i = 0; i < data_.num_respondents; ++i) {
            if (data_.is_missing(i, k)) continue;
            ll_(i, k) = obs_ll(i, k, obs_eta(i, k), block_kappa(i, k));
          }
          count("mixing", true);
        } else {
          count("mixing", false);
        }
        if (adapting_) tuner.observe(accept_prob);
      }
    }
  }

  // (5) rho on the logit scale; prior-only move.
  void update_rho() {
    for (int k = 0; k < spec_.num_variables; ++k) {
      StepTuner& tuner = rho_tuners_[k];
      const double rho_old = state_.rho[k];
      const double u_new = logit(rho_old) + tuner.step() * rng_.normal();
      const double rho_new = inv_logit(u_new);
      double accept_prob = 0.0;
      if (rho_new > 0.0 && rho_new < 1.0) {
        const double s2 = spec_.variant == Variant::Indep
                              ? state_.sigma[k] * state_.sigma[k]
                              : 1.0;
        const double quad_r = graph_.laplacian_quadform(state_.phi.col(k));
        const double quad_i = state_.phi.col(k).squaredNorm();
        auto lcar_part = [&](double rho) {
          double logdet = 0.0;
          for (int m = 0; m < spec_.num_areas; ++m)
            logdet += std::log(rho * graph_.laplacian_eigenvalues[m] + (1.0 - rho));
          return 0.5 * logdet - (rho * quad_r + (1.0 - rho) * quad_i) / (2.0 * s2);
        };
        double log_ratio = lcar_part(rho_new) - lcar_part(rho_old);
        log_ratio += std::log(rho_new * (1.0 - rho_new)) - std::log(rho_old * (1.0 - rho_old));
        accept_prob = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
        if (metropolis_accept(log_ratio)) {
          state_.rho[k] = rho_new;
          count("rho", true);
        } else {
          count("rho", false);
        }
      } else {
        count("rho", false);
      }
      if (adapting_) tuner.observe(accept_prob);
    }
  }

  // (6) scale parameters on the log scale, support-checked against sigma_upper.
  void update_scales() {
    if (spec_.variant == Variant::Indep) {
      for (int k = 0; k < spec_.num_variables; ++k) {
        StepTuner& tuner = sigma_tuners_[k];
        const double s_old = state_.sigma[k];
        const double log_new = std::log(s_old) + tuner.step() * rng_.normal();
        const double s_new = std::exp(log_new);
        double accept_prob = 0.0;
        if (s_new > 0.0 && s_new <= spec_.sigma_upper) {
          const double quad = state_.rho[k] * graph_.laplacian_quadform(state_.phi.col(k)) +
                              (1.0 - state_.rho[k]) * state_.phi.col(k).squaredNorm();
          auto part = [&](double s) { return -spec_.num_areas * std::log(s) - quad / (2.0 * s * s); };
          double log_ratio = part(s_new) - part(s_old) + (log_new - std::log(s_old));
          accept_prob = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
          if (metropolis_accept(log_ratio)) {
            state_.sigma[k] = s_new;
            count("sigma", true);
          } else {
            count("sigma", false);
          }
        } else {
          count("sigma", false);
        }
        if (adapting_) tuner.observe(accept_prob);
      }
    } else {
      StepTuner& tuner = sigma_tuners_[0];
      const double s_old = state_.sigma_mix;
      const double log_new = std::log(s_old) + tuner.step() * rng_.normal();
      const double s_new = std::exp(log_new);
      double accept_prob = 0.0;
      if (s_new > 0.0 && s_new <= spec_.sigma_upper) {
        const double ss = state_.mixing.squaredNorm();
        const double k2 = spec_.num_variables * spec_.num_variables;
        auto part = [&](double s) { return -k2 * std::log(s) - ss / (2.0 * s * s); };
        double log_ratio = part(s_new) - part(s_old) + (log_new - std::log(s_old));
        accept_prob = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
        if (metropolis_accept(log_ratio)) {
          state_.sigma_mix = s_new;
          count("sigma_M", true);
        } else {
          count("sigma_M", false);
        }
      } else {
        count("sigma_M", false);
      }
      if (adapting_) tuner.observe(accept_prob);
    }
  }

  // (7a) per-respondent row blocks of the individual effects.
  void update_ire_rows() {
    const int k_vars = spec_.num_variables;
    const double step = ire_row_tuner_.step();
    double mean_accept = 0.0;
    Eigen::VectorXd d(k_vars), d_psi(k_vars);
    for (int i = 0; i < data_.num_respondents; ++i) {
      for (int k = 0; k < k_vars; ++k) d[k] = step * rng_.normal();
      d_psi = state_.ire_mixing.transpose() * d;
      double log_ratio = 0.0;
      for (int k = 0; k < k_vars; ++k) {
        const double f_old = state_.ire_phi(i, k);
        log_ratio -= 0.5 * ((f_old + d[k]) * (f_old + d[k]) - f_old * f_old);
        if (!data_.is_missing(i, k))
          log_ratio += obs_ll(i, k, obs_eta(i, k) + d_psi[k], block_kappa(i, k)) - ll_(i, k);
      }
      mean_accept += std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
      if (metropolis_accept(log_ratio)) {
        state_.ire_phi.row(i) += d.transpose();
        psi_.row(i) += d_psi.transpose();
        for (int k = 0; k < k_vars; ++k) {
          if (data_.is_missing(i, k)) continue;
          ll_(i, k) = obs_ll(i, k, obs_eta(i, k), block_kappa(i, k));
        }
        count("ire_phi", true);
      } else {
        count("ire_phi", false);
      }
    }
    if (adapting_ && data_.num_respondents > 0)
      ire_row_tuner_.observe(mean_accept / data_.num_respondents);
  }

  // (7b) individual mixing matrix entries.
  void update_ire_mixing() {
    const int k_vars = spec_.num_variables;
    const double var_m = state_.sigma_ire_mix * state_.sigma_ire_mix;
    for (int l = 0; l < k_vars; ++l) {
      for (int k = 0; k < k_vars; ++k) {
        StepTuner& tuner = ire_mix_tuners_[l * k_vars + k];
        const double d = tuner.step() * rng_.normal();
        const double m_old = state_.ire_mixing(l, k);
        const double m_new = m_old + d;
        double log_ratio = -(m_new * m_new - m_old * m_old) / (2.0 * var_m);
        for (int i = 0; i < data_.num_respondents; ++i) {
          if (data_.is_missing(i, k)) continue;
          const double d_eta = d * state_.ire_phi(i, l);
          log_ratio += obs_ll(i, k, obs_eta(i, k) + d_eta, block_kappa(i, k)) - ll_(i, k);
        }
        const double accept_prob = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
        if (metropolis_accept(log_ratio)) {
          state_.ire_mixing(l, k) = m_new;
          psi_.col(k) += d * state_.ire_phi.col(l);
          for (int i = 0; i < data_.num_respondents; ++i) {
            if (data_.is_missing(i, k)) continue;
            ll_(i, k) = obs_ll(i, k, obs_eta(i, k), block_kappa(i, k));
          }
          count("ire_mixing", true);
        } else {
          count("ire_mixing", false);
        }
        if (adapting_) tuner.observe(accept_prob);
      }
    }
  }

  void update_sigma_ire() {
    StepTuner& tuner = sigma_ire_tuner_;
    const double s_old = state_.sigma_ire_mix;
    const double log_new = std::log(s_old) + tuner.step() * rng_.normal();
    const double s_new = std::exp(log_new);
    double accept_prob = 0.0;
    if (s_new > 0.0 && s_new <= spec_.sigma_upper) {
      const double ss = state_.ire_mixing.squaredNorm();
      const double k2 = spec_.num_variables * spec_.num_variables;
      auto part = [&](double s) { return -k2 * std::log(s) - ss / (2.0 * s * s); };
      double log_ratio = part(s_new) - part(s_old) + (log_new - std::log(s_old));
      accept_prob = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
      if (metropolis_accept(log_ratio)) {
        state_.sigma_ire_mix = s_new;
        count("sigma_Mt", true);
      } else {
        count("sigma_Mt", false);
      }
    } else {
      count("sigma_Mt", false);
    }
    if (adapting_) tuner.observe(accept_prob);
  }

  SavedDraw save_draw(int iteration) {
    SavedDraw d;
    d.chain = chain_id_;
    d.iteration = iteration;
    d.state = state_;
    d.theta = theta_;
    d.sigma_b = state_.spatial_covariance(spec_);
    d.sigma_b_ire = state_.individual_covariance();
    // Fresh evaluation keeps the archive exact regardless of cache roundoff.
    const auto lik = loglik(state_, spec_, data_);
    d.loglik_obs.resize(static_cast<int>(obs_pairs_.size()));
    for (size_t p = 0; p < obs_pairs_.size(); ++p)
      d.loglik_obs[static_cast<int>(p)] = lik.per_obs(obs_pairs_[p].first, obs_pairs_[p].second);
    d.logpost = lik.total + logprior(state_, spec_, graph_);
    return d;
  }

  std::vector<std::pair<int, int>> obs_pairs_ = observed_pairs(data_);
};

}  // namespace

void SamplerConfig::validate() const {
  if (num_chains < 1) throw std::invalid_argument("sampler: num_chains must be >= 1");
  if (iterations_per_chain < 1) throw std::invalid_argument("sampler: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations_per_chain)
    throw std::invalid_argument("sampler: burn_in must lie in [0, iterations)");
  if (thin < 1) throw std::invalid_argument("sampler: thin must be >= 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw std::invalid_argument("sampler: target acceptance must lie in (0,1)");
}

std::vector<std::pair<int, int>> observed_pairs(const SurveyDataset& data) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<size_t>(data.num_respondents) * data.num_variables);
  for (int i = 0; i < data.num_respondents; ++i)
    for (int k = 0; k < data.num_variables; ++k)
      if (!data.is_missing(i, k)) pairs.emplace_back(i, k);
  return pairs;
}

ParameterState initialize_state(const ModelSpec& spec, const SurveyDataset& data,
                                const AdjacencyGraph& graph, Rng& rng) {
  spec.validate();
  const int k_vars = spec.num_variables;
  const int j_cats = spec.num_categories;
  ParameterState s;

  // Smoothed empirical category frequencies per variable.
  auto counts_to_simplex = [&](const Eigen::VectorXd& counts) {
    Eigen::VectorXd d = counts.array() + 0.5;
    d /= d.sum();
    return d;
  };
  std::vector<Eigen::VectorXd> global(k_vars);
  for (int k = 0; k < k_vars; ++k) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(j_cats);
    for (int i = 0; i < data.num_respondents; ++i)
      if (!data.is_missing(i, k)) counts[data.responses(i, k) - 1] += 1.0;
    global[k] = counts.sum() > 0.0 ? counts_to_simplex(counts)
                                   : Eigen::VectorXd::Constant(j_cats, 1.0 / j_cats);
  }

  s.cutpoint_blocks.resize(spec.num_cutpoint_blocks());
  if (spec.cutpoint_mode == CutpointMode::Shared) {
    for (int k = 0; k < k_vars; ++k)
      s.cutpoint_blocks[k] = CutpointBlock::from_simplex(global[k]);
  } else {
    constexpr double kSparseFactor = 5.0;  // fewer than 5 J observations is sparse
    for (int z = 0; z < spec.num_cells; ++z) {
      for (int k = 0; k < k_vars; ++k) {
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(j_cats);
        for (int i = 0; i < data.num_respondents; ++i)
          if (data.cell_index[i] == z && !data.is_missing(i, k))
            counts[data.responses(i, k) - 1] += 1.0;
        Eigen::VectorXd d = counts.sum() > 0.0 ? counts_to_simplex(counts) : global[k];
        if (counts.sum() < kSparseFactor * j_cats) d = 0.5 * d + 0.5 * global[k];
        s.cutpoint_blocks[spec.block_index(z, k)] = CutpointBlock::from_simplex(d);
      }
    }
  }

  if (spec.include_alpha) s.alpha = Eigen::MatrixXd::Zero(spec.num_cells, k_vars);

  s.phi.resize(spec.num_areas, k_vars);
  for (int m = 0; m < spec.num_areas; ++m)
    for (int k = 0; k < k_vars; ++k) s.phi(m, k) = 0.1 * rng.normal();
  s.mixing = spec.variant == Variant::Indep
                 ? Eigen::MatrixXd::Identity(k_vars, k_vars)
                 : Eigen::MatrixXd(0.1 * Eigen::MatrixXd::Identity(k_vars, k_vars));
  s.rho = Eigen::VectorXd::Constant(k_vars, 0.5);
  if (spec.variant == Variant::Indep) s.sigma = Eigen::VectorXd::Ones(k_vars);
  s.sigma_mix = 1.0;
  if (spec.variant == Variant::CorrIRE) {
    s.ire_phi.resize(data.num_respondents, k_vars);
    for (int i = 0; i < data.num_respondents; ++i)
      for (int k = 0; k < k_vars; ++k) s.ire_phi(i, k) = 0.1 * rng.normal();
    if (data.num_respondents > 0) {
      const Eigen::RowVectorXd col_means = s.ire_phi.colwise().mean();
      s.ire_phi.rowwise() -= col_means;
    }
    s.ire_mixing = 0.1 * Eigen::MatrixXd::Identity(k_vars, k_vars);
    s.sigma_ire_mix = 1.0;
  }

  // Weighted centering of the spatial columns (no compensation needed at
  // initialization: the cut points are chosen afterwards by construction).
  double total = 0.0;
  for (int w : data.area_sample_sizes) total += w;
  if (total > 0.0) {
    for (int k = 0; k < k_vars; ++k) {
      for (int pass = 0; pass < 2; ++pass) {
        double ws = 0.0;
        for (int m = 0; m < spec.num_areas; ++m) ws += data.area_sample_sizes[m] * s.phi(m, k);
        s.phi.col(k).array() -= ws / total;
      }
    }
  }
  return s;
}

ChainResult run_chain(const ModelSpec& spec, const SurveyDataset& data,
                      const AdjacencyGraph& graph, const SamplerConfig& config, int chain_id) {
  spec.validate();
  config.validate();
  if (chain_id < 0 || chain_id >= config.num_chains)
    throw std::invalid_argument("sampler: chain_id out of range");
  ChainRunner runner(spec, data, graph, config, chain_id);
  return runner.run();
}

PosteriorDraws run_chains(const ModelSpec& spec, const SurveyDataset& data,
                          const AdjacencyGraph& graph, const SamplerConfig& config) {
  spec.validate();
  config.validate();
  PosteriorDraws out;
  out.spec = spec;
  out.config = config;
  out.obs_index = observed_pairs(data);

  std::vector<std::future<ChainResult>> futures;
  futures.reserve(config.num_chains);
  for (int c = 0; c < config.num_chains; ++c) {
    futures.push_back(std::async(std::launch::async, [&, c] {
      return run_chain(spec, data, graph, config, c);
    }));
  }
  for (auto& f : futures) {
    ChainResult r = f.get();
    out.acceptance_rates.push_back(r.acceptance_rates);
    for (auto& d : r.draws) out.draws.push_back(std::move(d));
  }
  return out;
}

}  // namespace spord
