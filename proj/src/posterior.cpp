#include "spord/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "spord/rng.hpp"

namespace spord {

namespace {

// Empirical quantile with linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

double quantile_of(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

}  // namespace

ArealSummary areal_summaries(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw std::invalid_argument("areal_summaries: empty archive");
  const int m_areas = draws.spec.num_areas;
  const int k_vars = draws.spec.num_variables;
  const int r = static_cast<int>(draws.draws.size());

  ArealSummary s;
  s.num_areas = m_areas;
  s.num_variables = k_vars;
  s.theta_mean = Eigen::MatrixXd::Zero(m_areas, k_vars);
  s.relevance = Eigen::MatrixXd::Zero(m_areas, k_vars);
  s.q025.resize(m_areas, k_vars);
  s.q975.resize(m_areas, k_vars);

  std::vector<double> buf(r);
  for (int m = 0; m < m_areas; ++m) {
    for (int k = 0; k < k_vars; ++k) {
      double sum = 0.0;
      int neg = 0;
      for (int d = 0; d < r; ++d) {
        const double v = draws.draws[d].theta(m, k);
        buf[d] = v;
        sum += v;
        neg += (v < 0.0);
      }
      s.theta_mean(m, k) = sum / r;
      s.relevance(m, k) = static_cast<double>(neg) / r;
      std::sort(buf.begin(), buf.end());
      s.q025(m, k) = quantile_sorted(buf, 0.025);
      s.q975(m, k) = quantile_sorted(buf, 0.975);
    }
  }
  return s;
}

CorrelationReport correlation_report(const PosteriorDraws& draws, CorrelationLevel level) {
  if (draws.draws.empty()) throw std::invalid_argument("correlation_report: empty archive");
  if (level == CorrelationLevel::Individual && draws.spec.variant != Variant::CorrIRE)
    throw std::invalid_argument(
        "correlation_report: individual level requires the corr_ire variant");

  const int k_vars = draws.spec.num_variables;
  CorrelationReport rep;
  rep.level = level;
  rep.mean = Eigen::MatrixXd::Identity(k_vars, k_vars);
  rep.lower = Eigen::MatrixXd::Identity(k_vars, k_vars);
  rep.upper = Eigen::MatrixXd::Identity(k_vars, k_vars);
  rep.excludes_zero = Eigen::MatrixXi::Zero(k_vars, k_vars);

  // Per-draw correlations, skipping draws with a degenerate diagonal.
  std::vector<Eigen::MatrixXd> corr;
  corr.reserve(draws.draws.size());
  for (const auto& d : draws.draws) {
    const Eigen::MatrixXd& cov = level == CorrelationLevel::Areal ? d.sigma_b : d.sigma_b_ire;
    bool ok = true;
    for (int k = 0; k < k_vars; ++k) ok = ok && cov(k, k) > 0.0;
    if (!ok) {
      ++rep.skipped_draws;
      continue;
    }
    Eigen::MatrixXd c(k_vars, k_vars);
    for (int k = 0; k < k_vars; ++k)
      for (int l = 0; l < k_vars; ++l)
        c(k, l) = cov(k, l) / std::sqrt(cov(k, k) * cov(l, l));
    corr.push_back(std::move(c));
  }
  if (rep.skipped_draws > 0)
    std::fprintf(stderr, "warning: correlation_report skipped %d draw(s) with zero variance\n",
                 rep.skipped_draws);
  if (corr.empty()) throw std::runtime_error("correlation_report: no usable draws");

  std::vector<double> buf(corr.size());
  for (int k = 0; k < k_vars; ++k) {
    for (int l = k + 1; l < k_vars; ++l) {
      double sum = 0.0;
      for (size_t d = 0; d < corr.size(); ++d) {
        buf[d] = corr[d](k, l);
        sum += buf[d];
      }
      std::sort(buf.begin(), buf.end());
      const double mean = sum / static_cast<double>(corr.size());
      const double lo = quantile_sorted(buf, 0.025);
      const double hi = quantile_sorted(buf, 0.975);
      rep.mean(k, l) = rep.mean(l, k) = mean;
      rep.lower(k, l) = rep.lower(l, k) = lo;
      rep.upper(k, l) = rep.upper(l, k) = hi;
      rep.excludes_zero(k, l) = rep.excludes_zero(l, k) = (lo > 0.0 || hi < 0.0);
    }
  }
  return rep;
}

PcaResult pca_of_spatial_means(const ArealSummary& summary, int num_components,
                               bool scale_columns) {
  const int m_areas = summary.num_areas;
  const int k_vars = summary.num_variables;
  if (m_areas < 2) throw std::invalid_argument("pca: need at least 2 areas");
  if (num_components < 1 || num_components > k_vars)
    throw std::invalid_argument("pca: num_components must lie in [1, K]");

  PcaResult out;
  out.column_means = summary.theta_mean.colwise().mean();
  Eigen::MatrixXd x = summary.theta_mean.rowwise() - out.column_means.transpose();
  if (scale_columns) {
    for (int k = 0; k < k_vars; ++k) {
      const double sd = std::sqrt(x.col(k).squaredNorm() / (m_areas - 1));
      if (sd > 0.0) x.col(k) /= sd;
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double total = sv.array().square().sum();

  out.loadings.resize(k_vars, num_components);
  out.scores.resize(m_areas, num_components);
  out.explained.resize(num_components);
  for (int c = 0; c < num_components; ++c) {
    Eigen::VectorXd load = svd.matrixV().col(c);
    Eigen::VectorXd score = svd.matrixU().col(c) * sv[c];
    // Sign convention: the loading of largest magnitude is positive.
    int arg = 0;
    load.cwiseAbs().maxCoeff(&arg);
    if (load[arg] < 0.0) {
      load = -load;
      score = -score;
    }
    out.loadings.col(c) = load;
    out.scores.col(c) = score;
    out.explained[c] = total > 0.0 ? sv[c] * sv[c] / total : 0.0;
  }
  return out;
}

PredictiveReport posterior_predictive_areal(const PosteriorDraws& draws,
                                            const SurveyDataset& data,
                                            const std::vector<int>& area_filter,
                                            std::uint64_t seed) {
  if (draws.draws.empty()) throw std::invalid_argument("predictive: empty archive");
  const ModelSpec& spec = draws.spec;
  if (data.num_variables != spec.num_variables || data.num_areas != spec.num_areas)
    throw std::invalid_argument("predictive: dataset does not match the archive");

  std::vector<char> keep(spec.num_areas, area_filter.empty() ? 1 : 0);
  for (int a : area_filter) {
    if (a < 0 || a >= spec.num_areas)
      throw std::invalid_argument("predictive: area filter index out of range");
    keep[a] = 1;
  }
  std::vector<int> areas;
  for (int m = 0; m < spec.num_areas; ++m)
    if (keep[m]) areas.push_back(m);

  // Respondents retained per (area, variable): those with observed values.
  const int j_cats = spec.num_categories;
  const int k_vars = spec.num_variables;
  std::vector<std::vector<int>> area_resp(spec.num_areas);
  for (int i = 0; i < data.num_respondents; ++i)
    if (keep[data.area_index[i]]) area_resp[data.area_index[i]].push_back(i);
  for (int m : areas)
    if (area_resp[m].empty())
      throw std::invalid_argument("predictive: no respondents in area " + std::to_string(m + 1));

  const int r = static_cast<int>(draws.draws.size());
  Rng rng(splitmix64(seed) ^ 0x9e01f3adULL);

  PredictiveReport rep;
  // counts[draw][(area-slot, k, j)]
  std::vector<std::vector<double>> pct(
      static_cast<size_t>(r), std::vector<double>(areas.size() * k_vars * j_cats, 0.0));
  std::vector<std::vector<int>> denom(areas.size(), std::vector<int>(k_vars, 0));

  for (int d = 0; d < r; ++d) {
    const SavedDraw& draw = draws.draws[d];
    const Eigen::MatrixXd psi = draw.state.psi();
    for (size_t s = 0; s < areas.size(); ++s) {
      const int m = areas[s];
      for (int i : area_resp[m]) {
        const int z = data.cell_index[i];
        for (int k = 0; k < k_vars; ++k) {
          if (data.is_missing(i, k)) continue;
          double eta = draw.theta(m, k);
          if (spec.include_alpha) eta += draw.state.alpha(z, k);
          if (psi.size() > 0) eta += psi(i, k);
          const auto& kappa = draw.state.cutpoint_blocks[spec.block_index(z, k)].cutpoints;
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
          pct[d][(s * k_vars + k) * j_cats + (y - 1)] += 1.0;
          if (d == 0) ++denom[s][k];
        }
      }
    }
    for (size_t s = 0; s < areas.size(); ++s)
      for (int k = 0; k < k_vars; ++k) {
        const int nobs = denom[s][k];
        if (nobs == 0) continue;
        for (int j = 0; j < j_cats; ++j)
          pct[d][(s * k_vars + k) * j_cats + j] *= 100.0 / nobs;
      }
  }

  std::vector<double> buf(r);
  for (size_t s = 0; s < areas.size(); ++s) {
    const int m = areas[s];
    for (int k = 0; k < k_vars; ++k) {
      const int nobs = denom[s][k];
      if (nobs == 0) continue;
      std::vector<int> observed(j_cats, 0);
      for (int i : area_resp[m])
        if (!data.is_missing(i, k)) ++observed[data.responses(i, k) - 1];
      for (int j = 0; j < j_cats; ++j) {
        PredictiveCell cell;
        cell.area = m;
        cell.variable = k;
        cell.category = j + 1;
        cell.n_respondents = nobs;
        double sum = 0.0;
        for (int d = 0; d < r; ++d) {
          buf[d] = pct[d][(s * k_vars + k) * j_cats + j];
          sum += buf[d];
        }
        cell.mean_pct = sum / r;
        std::sort(buf.begin(), buf.end());
        cell.q025 = quantile_sorted(buf, 0.025);
        cell.q975 = quantile_sorted(buf, 0.975);
        cell.observed_pct = 100.0 * observed[j] / nobs;
        cell.covered = cell.q025 <= cell.observed_pct && cell.observed_pct <= cell.q975;
        rep.cells.push_back(cell);
      }
    }
  }
  return rep;
}

PoststratReport poststratify(const PosteriorDraws& draws,
                             const Eigen::MatrixXd& population_counts) {
  if (draws.draws.empty()) throw std::invalid_argument("poststratify: empty archive");
  const ModelSpec& spec = draws.spec;
  const int j_cats = spec.num_categories;
  const int k_vars = spec.num_variables;
  if (population_counts.rows() != spec.num_cells || population_counts.cols() != spec.num_areas)
    throw std::invalid_argument("poststratify: population counts must be Z x M");
  if ((population_counts.array() < 0.0).any())
    throw std::invalid_argument("poststratify: negative population count");
  for (int m = 0; m < spec.num_areas; ++m) {
    if (population_counts.col(m).sum() <= 0.0)
      throw std::invalid_argument("poststratify: area " + std::to_string(m + 1) +
                                  " has zero total population");
  }

  const int r = static_cast<int>(draws.draws.size());
  PoststratReport rep;
  std::vector<double> buf(r);
  for (int m = 0; m < spec.num_areas; ++m) {
    const double total = population_counts.col(m).sum();
    for (int k = 0; k < k_vars; ++k) {
      // per-draw weighted cell probabilities for each category
      Eigen::MatrixXd p(r, j_cats);
      for (int d = 0; d < r; ++d) {
        const SavedDraw& draw = draws.draws[d];
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(j_cats);
        for (int z = 0; z < spec.num_cells; ++z) {
          const double w = population_counts(z, m);
          if (w == 0.0) continue;
          double eta = draw.theta(m, k);
          if (spec.include_alpha) eta += draw.state.alpha(z, k);
          const auto& kappa = draw.state.cutpoint_blocks[spec.block_index(z, k)].cutpoints;
          acc += w * category_probs(eta, kappa);
        }
        p.row(d) = acc.transpose() / total;
      }
      for (int j = 0; j < j_cats; ++j) {
        PoststratRow row;
        row.area = m;
        row.variable = k;
        row.category = j + 1;
        for (int d = 0; d < r; ++d) buf[d] = p(d, j);
        row.mean = p.col(j).mean();
        std::sort(buf.begin(), buf.end());
        row.q025 = quantile_sorted(buf, 0.025);
        row.q975 = quantile_sorted(buf, 0.975);
        rep.rows.push_back(row);
      }
    }
  }
  return rep;
}

}  // namespace spord
