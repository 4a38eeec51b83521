#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "deltabound/errors.hpp"
#include "deltabound/oracle.hpp"
#include "deltabound/vector_ops.hpp"

namespace deltabound {

// A radius along some direction at which the oracle was observed to return a
// label different from y0.
struct BoundaryDistance {
  double value = 0.0;
};

// Sliding window of accepted improvement ratios g(theta_t) / g(theta_{t-1}).
class RatioStore {
 public:
  explicit RatioStore(std::size_t capacity = 100, std::size_t min_samples = 10)
      : capacity_(capacity), min_samples_(min_samples) {
    if (capacity_ == 0) throw InvalidArgument("RatioStore capacity must be >= 1");
  }

  void push(double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
      throw RatioOutOfRange("ratio " + std::to_string(ratio) + " outside (0, 1)");
    }
    ratios_.push_back(ratio);
    if (ratios_.size() > capacity_) ratios_.pop_front();
  }

  std::size_t size() const { return ratios_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t min_samples() const { return min_samples_; }
  const std::deque<double>& ratios() const { return ratios_; }

  // Sorted stored ratios that do not exceed the bound.
  std::vector<double> truncated(double bound) const {
    std::vector<double> out;
    for (double r : ratios_) {
      if (r <= bound) out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t min_samples_;
  std::deque<double> ratios_;
};

inline void record_ratio(RatioStore& store, BoundaryDistance g_new, BoundaryDistance g_old) {
  if (!(g_new.value > 0.0) || !(g_new.value < g_old.value)) {
    throw RatioOutOfRange("record_ratio requires 0 < g_new < g_old");
  }
  store.push(g_new.value / g_old.value);
}

// Lower end of the fallback ICDF support.
inline double fallback_floor(double delta) { return std::max(0.0, delta - 4.0 * (1.0 - delta)); }

// Inverse CDF G(p) of the improvement ratio, conditioned on ratio <= delta.
// Uses the empirical quantile of stored ratios once enough of them fall at or
// below delta, else a uniform law on [fallback_floor(delta), delta].
class RatioIcdf {
 public:
  RatioIcdf(const RatioStore& store, double delta) : delta_(delta) {
    sorted_ = store.truncated(delta);
    empirical_ = sorted_.size() >= store.min_samples() && !sorted_.empty();
    lo_ = fallback_floor(delta);
  }

  bool empirical() const { return empirical_; }

  double operator()(double p) const {
    p = std::clamp(p, 0.0, 1.0);
    if (empirical_) {
      const auto n = static_cast<double>(sorted_.size());
      const double idx = std::clamp(std::ceil(p * n), 1.0, n);
      return sorted_[static_cast<std::size_t>(idx) - 1];
    }
    return lo_ + p * (delta_ - lo_);
  }

 private:
  double delta_;
  double lo_;
  bool empirical_ = false;
  std::vector<double> sorted_;
};

inline double icdf_query(const RatioStore& store, double p, double delta) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("icdf_query: p must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("icdf_query: delta must lie in (0, 1)");
  return RatioIcdf(store, delta)(p);
}

// One query: is g(dir) <= radius?
inline bool compare_at_radius(DecisionOracle& oracle, std::span<const double> x0, Label y0,
                              std::span<const double> dir, double radius) {
  if (!(norm(dir) > 0.0)) throw ZeroDirection("compare_at_radius: zero direction");
  if (!(radius > 0.0)) throw InvalidArgument("compare_at_radius: radius must be positive");
  const Vector probe = point_along(x0, dir, radius);
  return oracle.is_adversarial(y0, probe);
}

// Bootstrap estimate of g(theta): doubles the radius from lambda_init until
// the probe is adversarial (at most 30 doublings), then bisects until the
// bracket width is within rel_tol of its upper end. Budget exhaustion during
// the bisection returns the current verified upper end.
inline BoundaryDistance initial_g_evaluation(DecisionOracle& oracle, std::span<const double> x0, Label y0,
                                             std::span<const double> theta, double lambda_init,
                                             double rel_tol) {
  if (!(lambda_init > 0.0)) throw InvalidArgument("lambda_init must be positive");
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
  constexpr int kMaxDoublings = 30;
  double lo = 0.0;
  double hi = 0.0;
  double lambda = lambda_init;
  for (int i = 0; i <= kMaxDoublings; ++i) {
    if (compare_at_radius(oracle, x0, y0, theta, lambda)) {
      hi = lambda;
      break;
    }
    lo = lambda;
    lambda *= 2.0;
  }
  if (hi == 0.0) throw NoBoundaryFound("no adversarial point within 2^30 x lambda_init along this direction");
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    try {
      if (compare_at_radius(oracle, x0, y0, theta, mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    } catch (const BudgetExhausted&) {
      break;
    }
  }
  return {hi};
}

// Bisection in probability space of the ratio ICDF. The caller has already
// verified that radius g_prev * delta is adversarial along theta_new. Keeps
// "adversarial at G(r)" and "not adversarial at G(l)" (l = 0 is the unprobed
// floor) and stops once G(r) - G(l) <= 1 - delta. Probes whose ratio adds no
// information (at or beyond an already-known endpoint) move the bracket for
// free. Budget exhaustion ends the search with the current verified endpoint.
inline BoundaryDistance improved_binary_search(DecisionOracle& oracle, std::span<const double> x0, Label y0,
                                               std::span<const double> theta_new, BoundaryDistance g_prev,
                                               double delta, const RatioStore& store) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  const RatioIcdf G(store, delta);
  const double precision = 1.0 - delta;

  double l = 0.0, r = 1.0;
  double upper = delta;  // verified adversarial ratio
  double lower = G(0.0);
  bool lower_probed = false;

  for (int iter = 0; iter < 64 && upper - lower > precision; ++iter) {
    const double mid = 0.5 * (l + r);
    const double ratio = G(mid);
    if (ratio >= upper) {
      r = mid;
      continue;
    }
    if (ratio < lower || (ratio == lower && lower_probed)) {
      l = mid;
      continue;
    }
    bool adversarial = false;
    try {
      adversarial = compare_at_radius(oracle, x0, y0, theta_new, g_prev.value * ratio);
    } catch (const BudgetExhausted&) {
      break;
    }
    if (adversarial) {
      r = mid;
      upper = ratio;
    } else {
      l = mid;
      lower = ratio;
      lower_probed = true;
    }
  }
  return {g_prev.value * upper};
}

}  // namespace deltabound
