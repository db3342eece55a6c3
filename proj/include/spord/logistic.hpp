#pragma once

#include <cmath>
#include <limits>

namespace spord {

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Numerically stable logistic CDF.
inline double inv_logit(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// log(sigmoid(x)) = -softplus(-x)
inline double log_inv_logit(double x) { return -softplus(-x); }

// log(sigmoid(b) - sigmoid(a)) for a < b, without catastrophic cancellation:
//   sigmoid(b) - sigmoid(a) = sigmoid(b) * sigmoid(-a) * (1 - exp(a - b))
inline double log_inv_logit_diff(double a, double b) {
  if (!(a < b)) return -std::numeric_limits<double>::infinity();
  return log_inv_logit(b) + log_inv_logit(-a) + std::log1p(-std::exp(a - b));
}

}  // namespace spord
