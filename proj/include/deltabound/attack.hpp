#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deltabound/distance_eval.hpp"
#include "deltabound/errors.hpp"
#include "deltabound/oracle.hpp"
#include "deltabound/random.hpp"
#include "deltabound/sampling.hpp"
#include "deltabound/vector_ops.hpp"

namespace deltabound {

enum class DeltaKind { linear, sqrt, log };

inline DeltaKind parse_delta_kind(std::string_view s) {
  if (s == "linear") return DeltaKind::linear;
  if (s == "sqrt") return DeltaKind::sqrt;
  if (s == "log") return DeltaKind::log;
  throw InvalidArgument("unknown delta schedule '" + std::string(s) + "'");
}

inline std::string_view delta_kind_name(DeltaKind k) {
  switch (k) {
    case DeltaKind::linear: return "linear";
    case DeltaKind::sqrt: return "sqrt";
    case DeltaKind::log: return "log";
  }
  return "?";
}

// Required improvement factor delta_t = 1 - C / s(t), natural log for `log`.
inline double delta_value(DeltaKind kind, double factor, std::size_t t) {
  if (!(factor > 0.0 && factor < 1.0)) throw InvalidArgument("delta factor must lie in (0, 1)");
  const double tt = static_cast<double>(t);
  switch (kind) {
    case DeltaKind::linear: return 1.0 - factor / (tt + 1.0);
    case DeltaKind::sqrt: return 1.0 - factor / std::sqrt(tt + 1.0);
    case DeltaKind::log: return 1.0 - factor / std::log(tt + 2.0);
  }
  return 1.0 - factor;
}

struct AttackConfig {
  PSchedule p_schedule = PSchedule::constant;
  DeltaKind delta_kind = DeltaKind::log;
  double delta_factor = 0.05;
  SamplerConfig sampler;
  std::uint64_t budget = 1000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> basis_cap;  // default: min(d / 2, 50)
  std::size_t init_retries = 20;
  double init_rel_tol = 0.05;

  void check() const {
    if (!(delta_factor > 0.0 && delta_factor < 1.0)) throw InvalidArgument("delta factor must lie in (0, 1)");
    // delta_0 = 1 - C / ln 2 for the log schedule
    if (delta_kind == DeltaKind::log && !(delta_factor < std::log(2.0))) {
      throw InvalidArgument("log delta schedule needs a factor below ln 2");
    }
    if (budget == 0) return;
    sampler.check();
  }

  std::size_t resolved_basis_cap(std::size_t dim) const {
    return basis_cap ? *basis_cap : std::min<std::size_t>(dim / 2, 50);
  }
};

struct TraceRow {
  std::size_t t = 0;
  std::uint64_t queries_used = 0;  // cumulative ledger count after this iteration
  double g_best = 0.0;
  bool accepted = false;
  double ratio = std::numeric_limits<double>::quiet_NaN();  // accepted iterations only
  std::uint64_t binsearch_queries = 0;
  double delta = 0.0;
};

struct AttackTrace {
  std::uint64_t init_queries = 0;
  std::vector<TraceRow> rows;
};

struct AttackState {
  Vector x0;
  Label y0 = 0;
  Vector theta;
  BoundaryDistance g_best;
  std::deque<Vector> basis;  // orthonormal, previously accepted directions
  std::size_t t = 0;
  RatioStore ratio_store;
  AttackTrace trace;
  bool exhausted = false;
};

struct AttackResult {
  Vector x0;
  Label y0 = 0;
  Vector adversarial_point;
  double distance = 0.0;
  std::uint64_t queries_used = 0;
  AttackTrace trace;
};

// v minus its projections onto an orthonormal basis (two Gram-Schmidt passes).
inline Vector orthogonal_residual(std::span<const double> v, const std::deque<Vector>& basis) {
  Vector r(v.begin(), v.end());
  const double vn = norm(v);
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) axpy(-dot(r, b), b, r);
  }
  if (!(norm(r) >= 1e-9 * vn) || vn == 0.0) {
    throw DegenerateResidual("vector lies in the span of the accepted-direction basis");
  }
  return r;
}

namespace attack_detail {

// u with its components along the basis and along theta removed.
inline Vector perturbation_residual(std::span<const double> theta, const std::deque<Vector>& basis,
                                    std::span<const double> u) {
  std::deque<Vector> span = basis;
  try {
    span.push_back(normalized(orthogonal_residual(theta, basis)));
  } catch (const DegenerateResidual&) {
    // theta already lies in the basis span
  }
  Vector r(u.begin(), u.end());
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : span) axpy(-dot(r, b), b, r);
  }
  return r;
}

}  // namespace attack_detail

// normalize(theta + u_perp), u_perp being the part of the perturbation u
// orthogonal to theta and to every accepted direction in the basis.
inline Vector candidate_direction(std::span<const double> theta, const std::deque<Vector>& basis,
                                  std::span<const double> u) {
  Vector w(theta.begin(), theta.end());
  axpy(1.0, attack_detail::perturbation_residual(theta, basis, u), w);
  return normalized(w);
}

// Draws u = p(t) z / ||z|| and returns candidate_direction(theta, basis, u).
// Draws whose perturbation lies in span(basis, theta) are redrawn; after 10
// consecutive such draws the basis is cleared.
inline Vector propose_candidate(AttackState& state, const AttackConfig& cfg, Rng& rng) {
  const double scale = p_value(cfg.p_schedule, state.t);
  int failures = 0;
  while (true) {
    const Vector z = sample_direction(cfg.sampler, state.theta.size(), rng);
    const Vector u = scaled(z, scale / norm(z));
    const Vector u_perp = attack_detail::perturbation_residual(state.theta, state.basis, u);
    if (norm(u_perp) >= 1e-9 * norm(u)) {
      Vector w = state.theta;
      axpy(1.0, u_perp, w);
      return normalized(w);
    }
    if (++failures >= 10) {
      if (state.basis.empty()) {
        // one-dimensional input: only +-theta exist
        Vector w = state.theta;
        axpy(1.0, u, w);
        if (norm(w) > 0.0) return normalized(w);
      }
      state.basis.clear();
      failures = 0;
    }
  }
}

namespace attack_detail {

inline void push_basis(AttackState& state, const Vector& direction, std::size_t cap) {
  if (cap == 0) return;
  try {
    state.basis.push_back(normalized(orthogonal_residual(direction, state.basis)));
  } catch (const DegenerateResidual&) {
    return;  // already spanned
  }
  while (state.basis.size() > cap) state.basis.pop_front();
}

}  // namespace attack_detail

// One DeltaBound iteration: propose, test at g_best * delta_t with a single
// query, and on success refine g via the improved binary search.
inline void attack_iteration(AttackState& state, DecisionOracle& oracle, const AttackConfig& cfg, Rng& rng) {
  if (state.exhausted || oracle.ledger().exhausted()) {
    state.exhausted = true;
    return;
  }
  const double delta = delta_value(cfg.delta_kind, cfg.delta_factor, state.t);
  Vector candidate = propose_candidate(state, cfg, rng);

  bool accepted = false;
  try {
    accepted = compare_at_radius(oracle, state.x0, state.y0, candidate, state.g_best.value * delta);
  } catch (const BudgetExhausted&) {
    state.exhausted = true;
    return;
  }

  TraceRow row;
  row.t = state.t;
  row.delta = delta;
  row.accepted = accepted;
  if (accepted) {
    attack_detail::push_basis(state, state.theta, cfg.resolved_basis_cap(state.theta.size()));
    state.theta = std::move(candidate);
    const std::uint64_t before = oracle.ledger().used();
    const BoundaryDistance g_old = state.g_best;
    const BoundaryDistance g_new =
        improved_binary_search(oracle, state.x0, state.y0, state.theta, g_old, delta, state.ratio_store);
    row.binsearch_queries = oracle.ledger().used() - before;
    record_ratio(state.ratio_store, g_new, g_old);
    row.ratio = g_new.value / g_old.value;
    state.g_best = g_new;
  }
  row.g_best = state.g_best.value;
  row.queries_used = oracle.ledger().used();
  state.trace.rows.push_back(row);
  ++state.t;
  if (oracle.ledger().exhausted()) state.exhausted = true;
}

// Draws theta_0 (retrying on directions without a boundary), bootstraps
// g_best, then iterates until the budget is spent.
inline AttackResult run_attack(DecisionOracle& oracle, std::span<const double> x0, Label y0,
                               const AttackConfig& cfg) {
  cfg.check();
  if (x0.size() != oracle.dim()) throw DimensionMismatch("x0 dimension does not match the oracle");
  if (oracle.peek(x0) != y0) throw MisclassifiedInput("x0 is not classified as y0");
  if (oracle.ledger().exhausted()) throw InitializationFailed("no query budget available for initialization");

  Rng rng(cfg.seed);
  AttackState state;
  state.x0.assign(x0.begin(), x0.end());
  state.y0 = y0;

  const double x0_norm = norm(x0);
  const double lambda_init = x0_norm > 0.0 ? x0_norm : 1.0;
  bool initialized = false;
  for (std::size_t attempt = 0; attempt < cfg.init_retries && !initialized; ++attempt) {
    Vector theta = normalized(sample_direction(cfg.sampler, x0.size(), rng));
    try {
      state.g_best = initial_g_evaluation(oracle, x0, y0, theta, lambda_init, cfg.init_rel_tol);
      state.theta = std::move(theta);
      initialized = true;
    } catch (const NoBoundaryFound&) {
    } catch (const BudgetExhausted&) {
      break;
    }
  }
  if (!initialized) {
    throw InitializationFailed("no adversarial direction found after " +
                               std::to_string(oracle.ledger().used()) + " queries");
  }
  state.trace.init_queries = oracle.ledger().used();

  while (!state.exhausted) attack_iteration(state, oracle, cfg, rng);

  AttackResult result;
  result.x0 = state.x0;
  result.y0 = y0;
  result.adversarial_point = point_along(state.x0, state.theta, state.g_best.value);
  result.distance = state.g_best.value;
  result.queries_used = oracle.ledger().used();
  result.trace = std::move(state.trace);
  return result;
}

}  // namespace deltabound
