#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>

#include "deltabound/errors.hpp"
#include "deltabound/random.hpp"
#include "deltabound/vector_ops.hpp"

namespace deltabound {

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// First-order probability that a Gaussian step u ~ N(0, p^2 I) satisfies
// g(theta) <= g(theta + u) * delta, for gradient norm ||w||.
inline double update_probability(double g0, double grad_norm, double delta, double p) {
  if (!(grad_norm > 0.0)) throw InvalidArgument("gradient norm must be positive");
  if (!(p > 0.0)) throw InvalidArgument("p must be positive");
  return 1.0 - standard_normal_cdf(g0 * (1.0 - delta) / (grad_norm * p));
}

struct UpdateProbabilityCheck {
  double empirical = 0.0;
  double predicted = 0.0;
};

// Monte-Carlo estimate of the same event for the exactly linear
// g(theta) = g0 + w . theta, evaluated at theta = 0.
inline UpdateProbabilityCheck validate_theorem1(double g0, std::span<const double> w, double delta, double p,
                                       std::size_t n_samples, Rng& rng) {
  if (n_samples == 0) throw InvalidArgument("n_samples must be >= 1");
  const double predicted = update_probability(g0, norm(w), delta, p);
  std::normal_distribution<double> step(0.0, p);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    double wu = 0.0;
    for (double wi : w) wu += wi * step(rng);
    if (g0 <= (g0 + wu) * delta) ++hits;
  }
  return {static_cast<double>(hits) / static_cast<double>(n_samples), predicted};
}

}  // namespace deltabound
