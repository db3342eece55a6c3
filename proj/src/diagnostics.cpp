#include "spord/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace spord {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_var(const std::vector<double>& x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

void check_trace(const ScalarTrace& trace, size_t min_chains) {
  if (trace.chains.size() < min_chains)
    throw std::invalid_argument("diagnostics: need at least " + std::to_string(min_chains) +
                                " chains");
  const size_t len = trace.chains.front().size();
  for (const auto& c : trace.chains) {
    if (c.size() != len) throw std::invalid_argument("diagnostics: chains of unequal length");
    if (c.size() < 10) throw std::invalid_argument("diagnostics: need >= 10 draws per chain");
    for (double v : c)
      if (!std::isfinite(v)) throw std::invalid_argument("diagnostics: non-finite trace value");
  }
}

// Geyer initial-positive-sequence ESS for a single chain.
double ess_single(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  const double mean = mean_of(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= n;
  if (c0 <= 0.0) return 0.0;  // constant sequence

  auto gamma = [&](int lag) {
    double s = 0.0;
    for (int t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    return s / n;
  };

  // Sum paired autocorrelations while the pairs stay positive.
  double tau = 0.0;  // 2 * sum of positive Gamma_k, minus 1 at the end
  int lag = 0;
  while (lag + 1 < n) {
    const double pair = (gamma(lag) + gamma(lag + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
    lag += 2;
  }
  tau = std::max(tau - 1.0, 1.0);
  return n / tau;
}

}  // namespace

double gelman_rubin(const ScalarTrace& trace) {
  check_trace(trace, 2);

  // Halve every chain, keeping the stationary (second) half.
  std::vector<std::vector<double>> halves;
  for (const auto& c : trace.chains) {
    const size_t h = c.size() / 2;
    halves.emplace_back(c.end() - h, c.end());
  }
  const int m = static_cast<int>(halves.size());
  const double n = static_cast<double>(halves.front().size());

  std::vector<double> means(m), vars(m);
  for (int j = 0; j < m; ++j) {
    means[j] = mean_of(halves[j]);
    vars[j] = sample_var(halves[j], means[j]);
  }
  const double grand = mean_of(means);
  double b_over_n = 0.0;  // between-chain variance of the half means, B/n
  for (int j = 0; j < m; ++j) b_over_n += (means[j] - grand) * (means[j] - grand);
  b_over_n /= (m - 1);
  const double w = mean_of(vars);

  if (w <= 0.0) return b_over_n > 0.0 ? kInf : 1.0;
  // sqrt((W + B/n) / W): identical chains give exactly 1, and the statistic
  // dominates the textbook (n-1)/n form, never dropping below 1.
  return std::sqrt(1.0 + b_over_n / w);
}

double effective_sample_size(const ScalarTrace& trace) {
  check_trace(trace, 1);
  double total = 0.0;
  for (const auto& c : trace.chains) total += ess_single(c);
  return total;
}

WaicResult waic(const Eigen::MatrixXd& loglik_draws) {
  const int r = static_cast<int>(loglik_draws.rows());
  const int n = static_cast<int>(loglik_draws.cols());
  if (r < 2) throw std::invalid_argument("waic: need at least 2 draws");
  if (!loglik_draws.allFinite()) throw std::invalid_argument("waic: non-finite log-likelihood");

  WaicResult out;
  out.n_obs = n;
  for (int j = 0; j < n; ++j) {
    const auto col = loglik_draws.col(j);
    const double m = col.maxCoeff();
    out.lppd += m + std::log((col.array() - m).exp().mean());
    const double mean = col.mean();
    out.p_waic += (col.array() - mean).square().sum() / (r - 1);
  }
  out.waic = -2.0 * (out.lppd - out.p_waic);
  return out;
}

Eigen::MatrixXd loglik_matrix(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw std::invalid_argument("loglik_matrix: empty archive");
  const int r = static_cast<int>(draws.draws.size());
  const int n = static_cast<int>(draws.obs_index.size());
  Eigen::MatrixXd out(r, n);
  for (int d = 0; d < r; ++d) out.row(d) = draws.draws[d].loglik_obs.transpose();
  return out;
}

namespace {

using Extractor = std::function<double(const SavedDraw&)>;

void add_functionals(const PosteriorDraws& draws,
                     std::vector<std::pair<std::string, Extractor>>& fns) {
  const ModelSpec& spec = draws.spec;
  const int k_vars = spec.num_variables;
  const int j_m1 = spec.num_categories - 1;

  for (int b = 0; b < spec.num_cutpoint_blocks(); ++b) {
    for (int j = 0; j < j_m1; ++j) {
      std::string name;
      if (spec.cutpoint_mode == CutpointMode::Shared) {
        name = "kappa[" + std::to_string(b + 1) + "][" + std::to_string(j + 1) + "]";
      } else {
        const int z = b / k_vars, k = b % k_vars;
        name = "kappa[" + std::to_string(z + 1) + "][" + std::to_string(k + 1) + "][" +
               std::to_string(j + 1) + "]";
      }
      fns.emplace_back(name, [b, j](const SavedDraw& d) {
        return d.state.cutpoint_blocks[b].cutpoints[j];
      });
    }
  }
  if (spec.include_alpha) {
    for (int z = 1; z < spec.num_cells; ++z)
      for (int k = 0; k < k_vars; ++k)
        fns.emplace_back(
            "alpha[" + std::to_string(z + 1) + "][" + std::to_string(k + 1) + "]",
            [z, k](const SavedDraw& d) { return d.state.alpha(z, k); });
  }
  for (int k = 0; k < k_vars; ++k)
    for (int l = k; l < k_vars; ++l)
      fns.emplace_back("Sigma_b[" + std::to_string(k + 1) + "][" + std::to_string(l + 1) + "]",
                       [k, l](const SavedDraw& d) { return d.sigma_b(k, l); });
  if (spec.variant == Variant::CorrIRE) {
    for (int k = 0; k < k_vars; ++k)
      for (int l = k; l < k_vars; ++l)
        fns.emplace_back(
            "Sigmat_b[" + std::to_string(k + 1) + "][" + std::to_string(l + 1) + "]",
            [k, l](const SavedDraw& d) { return d.sigma_b_ire(k, l); });
  }
  for (int m = 0; m < spec.num_areas; ++m)
    for (int k = 0; k < k_vars; ++k)
      fns.emplace_back("theta[" + std::to_string(m + 1) + "][" + std::to_string(k + 1) + "]",
                       [m, k](const SavedDraw& d) { return d.theta(m, k); });
  for (int k = 0; k < k_vars; ++k)
    fns.emplace_back("rho[" + std::to_string(k + 1) + "]",
                     [k](const SavedDraw& d) { return d.state.rho[k]; });
  if (spec.variant == Variant::Indep) {
    for (int k = 0; k < k_vars; ++k)
      fns.emplace_back("sigma[" + std::to_string(k + 1) + "]",
                       [k](const SavedDraw& d) { return d.state.sigma[k]; });
  } else {
    fns.emplace_back("sigma_M", [](const SavedDraw& d) { return d.state.sigma_mix; });
  }
  if (spec.variant == Variant::CorrIRE) {
    fns.emplace_back("sigma_Mt", [](const SavedDraw& d) { return d.state.sigma_ire_mix; });
  }
}

}  // namespace

DiagnosticReport convergence_report(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw std::invalid_argument("diagnostics: empty archive");
  const int chains = draws.num_chains();
  const int per_chain = draws.draws_per_chain();
  if (static_cast<int>(draws.draws.size()) != chains * per_chain)
    throw std::invalid_argument("diagnostics: archive size inconsistent with config");

  std::vector<std::pair<std::string, Extractor>> fns;
  add_functionals(draws, fns);

  DiagnosticReport report;
  report.all_pass = true;
  ScalarTrace trace;
  trace.chains.assign(chains, std::vector<double>(per_chain));
  for (const auto& [name, fn] : fns) {
    for (int c = 0; c < chains; ++c)
      for (int d = 0; d < per_chain; ++d)
        trace.chains[c][d] = fn(draws.draws[c * per_chain + d]);

    DiagnosticRow row;
    row.functional = name;
    row.ess = effective_sample_size(trace);
    // R-hat needs at least two chains; single-chain archives get a NaN
    // sentinel and are gated on ESS alone.
    row.rhat = chains >= 2 ? gelman_rubin(trace) : kNaN;
    const bool rhat_ok = std::isnan(row.rhat) || row.rhat <= report.rhat_threshold;
    row.pass = rhat_ok && row.ess >= report.ess_threshold;
    report.all_pass = report.all_pass && row.pass;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace spord
