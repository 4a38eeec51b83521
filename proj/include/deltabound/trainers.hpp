#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deltabound/dataset.hpp"
#include "deltabound/errors.hpp"
#include "deltabound/model_spec.hpp"
#include "deltabound/random.hpp"

namespace deltabound {

// Family hyperparameters. Unset fields take the family default:
//   logreg   C = 1 (L2), max_iter = 100 Newton steps
//   dtree    unlimited depth
//   rforest  100 trees, unlimited depth, sqrt(d) features per split, bootstrap
//   gboost   100 stages, depth 3, learning rate 0.1, logistic loss
//   adaboost 50 SAMME rounds over depth-1 stumps, learning rate 1
//   mnb      alpha = 1
struct TrainHyper {
  std::optional<int> n_estimators;
  std::optional<int> max_depth;  // < 0 means unlimited
  std::optional<double> learning_rate;
  std::optional<double> C;
  std::optional<double> alpha;
  std::optional<std::size_t> max_features;
  std::optional<int> max_iter;
  std::size_t min_samples_split = 2;
};

namespace train_detail {

using Matrix = std::vector<Vector>;

// Working view for CART growth: rows of X referenced by index.
struct CartData {
  const Matrix& X;
  std::size_t dim;
};

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // lower is better
};

// Scans candidate thresholds of one feature. `cost(left_stats, right_stats)`
// evaluates a partition given accumulated statistics; `Stats` supports
// add(i), remove(i) and is copyable.
template <class Stats, class Cost>
void scan_feature(const CartData& data, std::vector<std::size_t>& idx, int feature, const Stats& total,
                  Cost&& cost, SplitChoice& best) {
  const auto f = static_cast<std::size_t>(feature);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return data.X[a][f] < data.X[b][f]; });
  Stats left = total.empty_like();
  Stats right = total;
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    left.add(idx[k]);
    right.remove(idx[k]);
    const double v = data.X[idx[k]][f];
    const double next = data.X[idx[k + 1]][f];
    if (!(next > v)) continue;
    const double c = cost(left, right);
    if (!best.found || c < best.score) {
      double thr = v + (next - v) / 2.0;
      if (!(thr < next)) thr = v;  // midpoint rounded up to next
      best = {true, feature, thr, c};
    }
  }
}

struct ClassStats {
  const std::vector<Label>* y;
  const std::vector<double>* w;
  std::vector<double> counts;
  double total = 0.0;

  ClassStats empty_like() const { return {y, w, std::vector<double>(counts.size(), 0.0), 0.0}; }
  void add(std::size_t i) {
    counts[static_cast<std::size_t>((*y)[i])] += (*w)[i];
    total += (*w)[i];
  }
  void remove(std::size_t i) {
    counts[static_cast<std::size_t>((*y)[i])] -= (*w)[i];
    total -= (*w)[i];
  }
  // total weight times gini impurity
  double weighted_gini() const {
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += c * c;
    return total - s / total;
  }
  bool pure() const {
    int nonzero = 0;
    for (double c : counts) nonzero += c > 0.0;
    return nonzero <= 1;
  }
  Label majority() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k) {
      if (counts[k] > counts[best]) best = k;
    }
    return static_cast<Label>(best);
  }
};

struct SumStats {
  const std::vector<double>* r;
  double sum = 0.0;
  double sq = 0.0;
  double n = 0.0;

  SumStats empty_like() const { return {r, 0.0, 0.0, 0.0}; }
  void add(std::size_t i) {
    sum += (*r)[i];
    sq += (*r)[i] * (*r)[i];
    n += 1.0;
  }
  void remove(std::size_t i) {
    sum -= (*r)[i];
    sq -= (*r)[i] * (*r)[i];
    n -= 1.0;
  }
  double sse() const { return n > 0.0 ? sq - sum * sum / n : 0.0; }
};

struct TreeBuilder {
  Tree tree;

  int add_leaf(double value) {
    tree.feature.push_back(-2);
    tree.threshold.push_back(-2.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.value.push_back(value);
    return static_cast<int>(tree.size()) - 1;
  }
};

// Gini CART with sample weights. max_features < d draws a random feature
// order per node and keeps scanning past max_features until a valid split
// exists.
inline Tree grow_classification_tree(const Matrix& X, const std::vector<Label>& y, const std::vector<double>& w,
                                     std::vector<std::size_t> rows, int n_classes, int max_depth,
                                     std::size_t max_features, std::size_t min_samples_split, Rng* rng) {
  const CartData data{X, X.front().size()};
  TreeBuilder b;
  std::function<int(std::vector<std::size_t>&, int)> grow = [&](std::vector<std::size_t>& idx, int depth) -> int {
    ClassStats total{&y, &w, std::vector<double>(static_cast<std::size_t>(n_classes), 0.0), 0.0};
    for (std::size_t i : idx) total.add(i);
    const Label majority = total.majority();
    if (total.pure() || idx.size() < min_samples_split || (max_depth >= 0 && depth >= max_depth)) {
      return b.add_leaf(majority);
    }
    std::vector<int> features(data.dim);
    std::iota(features.begin(), features.end(), 0);
    if (rng && max_features < data.dim) std::shuffle(features.begin(), features.end(), *rng);
    SplitChoice best;
    std::vector<std::size_t> work = idx;
    for (std::size_t k = 0; k < features.size(); ++k) {
      if (k >= max_features && best.found) break;
      scan_feature(data, work, features[k], total,
                   [](const ClassStats& l, const ClassStats& r) { return l.weighted_gini() + r.weighted_gini(); },
                   best);
    }
    if (!best.found) return b.add_leaf(majority);
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (X[i][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(i);
    }
    const int node = b.add_leaf(majority);
    b.tree.feature[node] = best.feature;
    b.tree.threshold[node] = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    b.tree.left[node] = l;
    b.tree.right[node] = r;
    b.tree.value[node] = 0.0;
    return node;
  };
  grow(rows, 0);
  return b.tree;
}

// Least-squares regression tree on residuals; leaf values come from
// `leaf_value(rows)`.
inline Tree grow_regression_tree(const Matrix& X, const std::vector<double>& r, std::vector<std::size_t> rows,
                                 int max_depth, std::size_t min_samples_split,
                                 const std::function<double(const std::vector<std::size_t>&)>& leaf_value) {
  const CartData data{X, X.front().size()};
  TreeBuilder b;
  std::function<int(std::vector<std::size_t>&, int)> grow = [&](std::vector<std::size_t>& idx, int depth) -> int {
    SumStats total{&r};
    for (std::size_t i : idx) total.add(i);
    if (idx.size() < min_samples_split || (max_depth >= 0 && depth >= max_depth) || total.sse() <= 0.0) {
      return b.add_leaf(leaf_value(idx));
    }
    SplitChoice best;
    std::vector<std::size_t> work = idx;
    for (std::size_t f = 0; f < data.dim; ++f) {
      scan_feature(data, work, static_cast<int>(f), total,
                   [](const SumStats& l, const SumStats& rr) { return l.sse() + rr.sse(); }, best);
    }
    if (!best.found) return b.add_leaf(leaf_value(idx));
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (X[i][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(i);
    }
    const int node = b.add_leaf(0.0);
    b.tree.feature[node] = best.feature;
    b.tree.threshold[node] = best.threshold;
    const int l = grow(left, depth + 1);
    const int rn = grow(right, depth + 1);
    b.tree.left[node] = l;
    b.tree.right[node] = rn;
    return node;
  };
  grow(rows, 0);
  return b.tree;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// L2-penalized binary logistic regression (intercept unpenalized) by Newton
// steps. Returns (w, b).
inline std::pair<Vector, double> fit_binary_logistic(const Matrix& X, const std::vector<double>& t, double C,
                                                     int max_iter) {
  const std::size_t n = X.size(), d = X.front().size();
  Eigen::MatrixXd A(n, d + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) A(i, j) = X[i][j];
    A(i, d) = 1.0;
  }
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y(i) = t[i];
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(d + 1, 1.0 / C);
  reg(d) = 0.0;

  auto loss = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd z = A * b;
    double l = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // log(1 + exp(z)) - y z, computed stably
      const double zi = z(i);
      l += (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) - y(i) * zi;
    }
    return l + 0.5 * (reg.array() * b.array().square()).sum();
  };

  double current = loss(beta);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd z = A * beta;
    Eigen::VectorXd p(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      s(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
    }
    const Eigen::VectorXd grad = A.transpose() * (p - y) + reg.cwiseProduct(beta);
    Eigen::MatrixXd H = A.transpose() * s.asDiagonal() * A;
    H.diagonal() += reg;
    H.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    double alpha = 1.0;
    Eigen::VectorXd next = beta - step;
    double next_loss = loss(next);
    while (next_loss > current && alpha > 1e-10) {
      alpha *= 0.5;
      next = beta - alpha * step;
      next_loss = loss(next);
    }
    if (next_loss > current) break;
    const double gain = current - next_loss;
    beta = next;
    current = next_loss;
    if (gain <= 1e-12 * std::max(1.0, std::abs(current))) break;
  }
  Vector w(d);
  for (std::size_t j = 0; j < d; ++j) w[j] = beta(j);
  return {w, beta(d)};
}

}  // namespace train_detail

// Fits one of the six tabular families on the dataset. Deterministic for a
// fixed seed. Throws DegenerateData when only one class is present and
// NegativeFeatures when mnb sees a negative value.
inline ModelSpec train_tabular_model(Family family, const LabeledDataset& data, const TrainHyper& hyper,
                                     std::uint64_t seed) {
  using namespace train_detail;
  data.check();
  const Matrix& X = data.features;
  const std::vector<Label>& y = data.labels;
  const std::size_t n = X.size(), d = X.front().size();
  const int K = data.n_classes;
  const auto Ku = static_cast<std::size_t>(K);
  {
    std::vector<char> present(Ku, 0);
    for (Label l : y) present[static_cast<std::size_t>(l)] = 1;
    if (std::count(present.begin(), present.end(), 1) < 2) throw DegenerateData("training data has a single class");
  }

  ModelSpec m;
  m.family = family;
  m.n_classes = K;
  m.n_features = d;
  const std::vector<double> unit_weights(n, 1.0);

  switch (family) {
    case Family::logreg: {
      const double C = hyper.C.value_or(1.0);
      const int iters = hyper.max_iter.value_or(100);
      LogRegParams p;
      const std::size_t rows = K == 2 ? 1 : Ku;
      for (std::size_t k = 0; k < rows; ++k) {
        const Label target = K == 2 ? 1 : static_cast<Label>(k);
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == target ? 1.0 : 0.0;
        auto [w, b] = fit_binary_logistic(X, t, C, iters);
        p.coef.push_back(std::move(w));
        p.intercept.push_back(b);
      }
      m.params = std::move(p);
      break;
    }
    case Family::dtree: {
      m.params = DTreeParams{grow_classification_tree(X, y, unit_weights, all_rows(n), K, hyper.max_depth.value_or(-1),
                                                      hyper.max_features.value_or(d), hyper.min_samples_split,
                                                      nullptr)};
      break;
    }
    case Family::rforest: {
      Rng rng(seed);
      const int trees = hyper.n_estimators.value_or(100);
      const std::size_t mf = hyper.max_features.value_or(
          std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d)))));
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      RForestParams p;
      for (int t = 0; t < trees; ++t) {
        // bootstrap as integer sample weights on distinct rows
        std::vector<double> w(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) w[pick(rng)] += 1.0;
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < n; ++i) {
          if (w[i] > 0.0) rows.push_back(i);
        }
        p.trees.push_back(grow_classification_tree(X, y, w, rows, K, hyper.max_depth.value_or(-1), mf,
                                                   hyper.min_samples_split, &rng));
      }
      m.params = std::move(p);
      break;
    }
    case Family::gboost: {
      const int stages = hyper.n_estimators.value_or(100);
      const int depth = hyper.max_depth.value_or(3);
      const double lr = hyper.learning_rate.value_or(0.1);
      GBoostParams p;
      p.learning_rate = lr;
      const std::size_t S = K == 2 ? 1 : Ku;
      std::vector<std::vector<double>> F(n, std::vector<double>(S));
      std::vector<double> prior(Ku, 0.0);
      for (Label l : y) prior[static_cast<std::size_t>(l)] += 1.0 / static_cast<double>(n);
      if (K == 2) {
        p.init_score = {std::log(prior[1] / prior[0])};
      } else {
        for (std::size_t k = 0; k < Ku; ++k) p.init_score.push_back(std::log(std::max(prior[k], 1e-300)));
      }
      for (auto& f : F) f = p.init_score;
      const auto rows = all_rows(n);
      for (int s = 0; s < stages; ++s) {
        std::vector<Tree> stage;
        std::vector<std::vector<double>> prob(n, std::vector<double>(S));
        for (std::size_t i = 0; i < n; ++i) {
          if (K == 2) {
            prob[i][0] = sigmoid(F[i][0]);
          } else {
            const double mx = *std::max_element(F[i].begin(), F[i].end());
            double z = 0.0;
            for (std::size_t k = 0; k < S; ++k) z += std::exp(F[i][k] - mx);
            for (std::size_t k = 0; k < S; ++k) prob[i][k] = std::exp(F[i][k] - mx) / z;
          }
        }
        for (std::size_t k = 0; k < S; ++k) {
          const Label target = K == 2 ? 1 : static_cast<Label>(k);
          std::vector<double> resid(n);
          for (std::size_t i = 0; i < n; ++i) resid[i] = (y[i] == target ? 1.0 : 0.0) - prob[i][k];
          // one Newton step per leaf
          auto leaf = [&](const std::vector<std::size_t>& idx) {
            double num = 0.0, den = 0.0;
            for (std::size_t i : idx) {
              num += resid[i];
              const double a = std::abs(resid[i]);
              den += K == 2 ? prob[i][0] * (1.0 - prob[i][0]) : a * (1.0 - a);
            }
            if (K != 2) num *= static_cast<double>(K - 1) / static_cast<double>(K);
            return std::abs(den) < 1e-150 ? 0.0 : num / den;
          };
          stage.push_back(grow_regression_tree(X, resid, rows, depth, hyper.min_samples_split, leaf));
        }
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t k = 0; k < S; ++k) F[i][k] += lr * stage[k].evaluate(X[i]);
        }
        p.stages.push_back(std::move(stage));
      }
      m.params = std::move(p);
      break;
    }
    case Family::adaboost: {
      const int rounds = hyper.n_estimators.value_or(50);
      const double lr = hyper.learning_rate.value_or(1.0);
      const int depth = hyper.max_depth.value_or(1);
      std::vector<double> w(n, 1.0 / static_cast<double>(n));
      AdaBoostParams p;
      for (int r = 0; r < rounds; ++r) {
        Tree stump = grow_classification_tree(X, y, w, all_rows(n), K, depth, d, hyper.min_samples_split, nullptr);
        double err = 0.0, total = 0.0;
        std::vector<char> miss(n);
        for (std::size_t i = 0; i < n; ++i) {
          miss[i] = static_cast<Label>(stump.evaluate(X[i])) != y[i];
          err += miss[i] ? w[i] : 0.0;
          total += w[i];
        }
        err /= total;
        if (err <= 0.0) {
          p.estimators.push_back(std::move(stump));
          p.estimator_weights.push_back(1.0);
          break;
        }
        if (err >= 1.0 - 1.0 / K) {
          if (p.estimators.empty()) throw DegenerateData("adaboost: first stump is no better than chance");
          break;
        }
        const double alpha = lr * (std::log((1.0 - err) / err) + std::log(K - 1.0));
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (miss[i]) w[i] *= std::exp(alpha);
          z += w[i];
        }
        for (auto& wi : w) wi /= z;
        p.estimators.push_back(std::move(stump));
        p.estimator_weights.push_back(alpha);
      }
      m.params = std::move(p);
      break;
    }
    case Family::mnb: {
      const double alpha = hyper.alpha.value_or(1.0);
      for (const auto& row : X) {
        for (double v : row) {
          if (v < 0.0) throw NegativeFeatures("multinomial naive Bayes needs nonnegative features");
        }
      }
      MnbParams p;
      std::vector<double> class_count(Ku, 0.0);
      std::vector<std::vector<double>> fc(Ku, std::vector<double>(d, 0.0));
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(y[i]);
        class_count[k] += 1.0;
        for (std::size_t j = 0; j < d; ++j) fc[k][j] += X[i][j];
      }
      for (std::size_t k = 0; k < Ku; ++k) {
        // classes absent from the data get a vanishing prior
        p.class_log_prior.push_back(std::log(std::max(class_count[k], 1e-300) / static_cast<double>(n)));
        double total = 0.0;
        for (std::size_t j = 0; j < d; ++j) total += fc[k][j] + alpha;
        std::vector<double> row(d);
        for (std::size_t j = 0; j < d; ++j) row[j] = std::log(fc[k][j] + alpha) - std::log(total);
        p.feature_log_prob.push_back(std::move(row));
      }
      m.params = std::move(p);
      break;
    }
    case Family::mlp:
      throw InvalidArgument("mlp models are inference-only; import weights through the interchange format");
  }
  validate(m);
  return m;
}

inline double training_accuracy(const ModelSpec& m, const LabeledDataset& data) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < data.size(); ++i) ok += predict(m, data.features[i]) == data.labels[i];
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

}  // namespace deltabound
