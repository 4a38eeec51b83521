#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deltabound/errors.hpp"
#include "deltabound/vector_ops.hpp"

namespace deltabound {

using Label = int;

// Hard-label classifier: point -> top-1 class index.
using LabelFn = std::function<Label(std::span<const double>)>;

// Monotone query counter with a hard cap.
class QueryLedger {
 public:
  explicit QueryLedger(std::uint64_t budget) : budget_(budget) {}

  std::uint64_t used() const { return used_; }
  std::uint64_t budget() const { return budget_; }
  std::uint64_t remaining() const { return budget_ - used_; }
  bool exhausted() const { return used_ >= budget_; }

  void charge() {
    if (used_ >= budget_) {
      throw BudgetExhausted("query budget of " + std::to_string(budget_) + " exhausted");
    }
    ++used_;
  }

 private:
  std::uint64_t used_ = 0;
  std::uint64_t budget_;
};

struct Bounds {
  double low;
  double high;
};

// Budget-enforcing hard-label view of a victim model. Every classification
// goes through the ledger; no caching, so repeated points are charged again.
class DecisionOracle {
 public:
  DecisionOracle(LabelFn classify, std::size_t dim, std::uint64_t budget,
                 std::optional<std::vector<Bounds>> clamp = std::nullopt)
      : classify_(std::move(classify)), dim_(dim), ledger_(budget), clamp_(std::move(clamp)) {
    if (clamp_ && clamp_->size() != dim_) {
      throw DimensionMismatch("clamp bounds have " + std::to_string(clamp_->size()) +
                              " entries, expected " + std::to_string(dim_));
    }
  }

  Label query(std::span<const double> x) {
    if (x.size() != dim_) {
      throw DimensionMismatch("query point has dimension " + std::to_string(x.size()) +
                              ", oracle expects " + std::to_string(dim_));
    }
    ledger_.charge();
    if (!clamp_) return classify_(x);
    Vector clamped(x.begin(), x.end());
    for (std::size_t i = 0; i < dim_; ++i) {
      clamped[i] = std::clamp(clamped[i], (*clamp_)[i].low, (*clamp_)[i].high);
    }
    return classify_(clamped);
  }

  bool is_adversarial(Label y0, std::span<const double> x) { return query(x) != y0; }

  // Out-of-ledger evaluation, for verification only. Applies the same clamp.
  Label peek(std::span<const double> x) const {
    if (x.size() != dim_) throw DimensionMismatch("peek: dimension mismatch");
    if (!clamp_) return classify_(x);
    Vector clamped(x.begin(), x.end());
    for (std::size_t i = 0; i < dim_; ++i) {
      clamped[i] = std::clamp(clamped[i], (*clamp_)[i].low, (*clamp_)[i].high);
    }
    return classify_(clamped);
  }

  std::size_t dim() const { return dim_; }
  const QueryLedger& ledger() const { return ledger_; }

 private:
  LabelFn classify_;
  std::size_t dim_;
  QueryLedger ledger_;
  std::optional<std::vector<Bounds>> clamp_;
};

}  // namespace deltabound
