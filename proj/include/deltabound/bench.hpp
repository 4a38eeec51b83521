#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "deltabound/attack.hpp"
#include "deltabound/config_io.hpp"
#include "deltabound/dataset.hpp"
#include "deltabound/errors.hpp"
#include "deltabound/model_io.hpp"
#include "deltabound/model_spec.hpp"
#include "deltabound/random.hpp"

namespace deltabound {

struct EvalSample {
  std::size_t index;  // row in the dataset
  Vector x0;
  Label y0;
};

struct EvalSelection {
  std::vector<EvalSample> samples;
  std::size_t requested = 0;
  std::size_t available = 0;  // correctly classified rows
  bool shortfall() const { return samples.size() < requested; }
};

// Seeded uniform subset, without replacement, of rows the model classifies
// correctly. Returned in ascending row order.
inline EvalSelection select_eval_samples(const ModelSpec& model, const LabeledDataset& data, std::size_t n,
                                         std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("select_eval_samples: n must be >= 1");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(model, data.features[i]) == data.labels[i]) pool.push_back(i);
  }
  if (pool.empty()) throw NoCorrectPredictions("model classifies no dataset row correctly");
  EvalSelection sel;
  sel.requested = n;
  sel.available = pool.size();
  Rng rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(n, pool.size()));
  std::sort(pool.begin(), pool.end());
  for (std::size_t i : pool) sel.samples.push_back({i, data.features[i], data.labels[i]});
  return sel;
}

inline double avg_l2(const std::vector<std::pair<Vector, Vector>>& pairs) {
  if (pairs.empty()) throw EmptyList("avg_l2 of an empty list");
  double s = 0.0;
  for (const auto& [a, b] : pairs) s += distance(a, b);
  return s / static_cast<double>(pairs.size());
}

struct NamedModel {
  std::string name;
  ModelSpec model;
};

struct RunRecord {
  std::string model;
  std::string config;
  std::size_t sample_index = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::string error;  // set when the attack failed
  bool verified = false;  // adversarial point re-predicts to a label != y0
  std::uint64_t budget = 0;
  AttackResult result;
};

struct BenchRow {
  std::string model;
  std::string config;
  std::size_t n_requested = 0;
  std::size_t n_samples = 0;
  bool shortfall = false;
  std::uint64_t budget = 0;
  std::size_t success_count = 0;
  std::size_t failed_count = 0;
  std::optional<double> avg_l2;  // over successful runs
  double mean_queries = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<RunRecord> runs;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::string timestamp;
};

struct BenchOptions {
  std::size_t n_samples = 86;
  std::uint64_t budget = 500;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

namespace bench_detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace bench_detail

// Attacks every selected sample with every configuration. Attack seeds are
// derive_seed(seed, row index) so results do not depend on scheduling.
inline BenchReport run_benchmark(const std::vector<NamedModel>& models, const LabeledDataset& data,
                                 const std::vector<NamedAttackConfig>& configs, const BenchOptions& opts) {
  data.check();
  for (const auto& m : models) {
    if (m.model.n_features != data.dim()) {
      throw DimensionMismatch("model '" + m.name + "' expects " + std::to_string(m.model.n_features) +
                              " features, dataset has " + std::to_string(data.dim()));
    }
  }
  BenchReport report;
  report.seed = opts.seed;
  report.timestamp = bench_detail::utc_timestamp();

  struct Task {
    std::size_t model;
    std::size_t config;
    EvalSample sample;
  };
  std::vector<Task> tasks;
  std::vector<EvalSelection> selections;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    selections.push_back(select_eval_samples(models[mi].model, data, opts.n_samples, opts.seed));
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      for (const auto& s : selections.back().samples) tasks.push_back({mi, ci, s});
    }
  }

  report.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& task = tasks[k];
      const ModelSpec& model = models[task.model].model;
      RunRecord rec;
      rec.model = models[task.model].name;
      rec.config = configs[task.config].label;
      rec.sample_index = task.sample.index;
      rec.seed = derive_seed(opts.seed, task.sample.index);
      rec.budget = opts.budget;
      AttackConfig cfg = configs[task.config].config;
      cfg.budget = opts.budget;
      cfg.seed = rec.seed;
      DecisionOracle oracle(as_label_fn(model), model.n_features, opts.budget);
      try {
        rec.result = run_attack(oracle, task.sample.x0, task.sample.y0, cfg);
        rec.success = true;
        rec.verified = predict(model, rec.result.adversarial_point) != task.sample.y0;
      } catch (const Error& e) {
        rec.error = e.what();
        rec.result.queries_used = oracle.ledger().used();
      }
      report.runs[k] = std::move(rec);
    }
  };
  const unsigned jobs = std::max(1u, opts.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      BenchRow row;
      row.model = models[mi].name;
      row.config = configs[ci].label;
      row.n_requested = opts.n_samples;
      row.n_samples = selections[mi].samples.size();
      row.shortfall = selections[mi].shortfall();
      row.budget = opts.budget;
      double l2 = 0.0, queries = 0.0;
      std::size_t runs = 0;
      for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (tasks[k].model != mi || tasks[k].config != ci) continue;
        const auto& rec = report.runs[k];
        ++runs;
        queries += static_cast<double>(rec.result.queries_used);
        if (rec.success) {
          ++row.success_count;
          l2 += rec.result.distance;
        } else {
          ++row.failed_count;
        }
      }
      if (row.success_count > 0) row.avg_l2 = l2 / static_cast<double>(row.success_count);
      if (runs > 0) row.mean_queries = queries / static_cast<double>(runs);
      report.rows.push_back(row);
    }
  }
  return report;
}

inline nlohmann::json report_to_json(const BenchReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"model", row.model},
                    {"config", row.config},
                    {"n_requested", row.n_requested},
                    {"n_samples", row.n_samples},
                    {"shortfall", row.shortfall},
                    {"budget", row.budget},
                    {"success_count", row.success_count},
                    {"failed_count", row.failed_count},
                    {"avg_l2", row.avg_l2 ? nlohmann::json(*row.avg_l2) : nlohmann::json(nullptr)},
                    {"mean_queries", row.mean_queries}});
  }
  return {{"rows", rows},
          {"metadata", {{"seed", r.seed}, {"timestamp", r.timestamp}, {"config", r.config}}}};
}

inline std::string report_table(const BenchReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "model" << std::setw(18) << "config" << std::right << std::setw(8) << "n"
     << std::setw(8) << "budget" << std::setw(10) << "success" << std::setw(12) << "avg_l2" << std::setw(12)
     << "queries" << '\n';
  for (const auto& row : r.rows) {
    os << std::left << std::setw(12) << row.model << std::setw(18) << row.config << std::right << std::setw(8)
       << row.n_samples << std::setw(8) << row.budget << std::setw(10) << row.success_count << std::setw(12);
    if (row.avg_l2) {
      os << std::fixed << std::setprecision(4) << *row.avg_l2;
    } else {
      os << "-";
    }
    os << std::setw(12) << std::fixed << std::setprecision(1) << row.mean_queries << '\n';
    if (row.shortfall) os << "  (only " << row.n_samples << " correctly classified rows available)\n";
    if (row.failed_count) os << "  (" << row.failed_count << " runs failed and are excluded from avg_l2)\n";
  }
  return os.str();
}

// Standard bisection probe count for precision (1 - delta).
inline double standard_search_queries(double delta) { return std::floor(std::log2(1.0 / (1.0 - delta)) + 1.0); }

struct TraceAggregate {
  // Indexed by acceptance number k (0-based) across runs.
  std::vector<double> mean_ratio;
  std::vector<double> mean_binsearch_queries;
  std::vector<double> mean_standard_queries;
  std::vector<double> mean_delta;
  std::vector<std::size_t> runs;
};

inline TraceAggregate aggregate_traces(const std::vector<AttackResult>& results) {
  TraceAggregate agg;
  for (const auto& res : results) {
    std::size_t k = 0;
    for (const auto& row : res.trace.rows) {
      if (!row.accepted) continue;
      if (agg.runs.size() <= k) {
        agg.mean_ratio.push_back(0.0);
        agg.mean_binsearch_queries.push_back(0.0);
        agg.mean_standard_queries.push_back(0.0);
        agg.mean_delta.push_back(0.0);
        agg.runs.push_back(0);
      }
      agg.mean_ratio[k] += row.ratio;
      agg.mean_binsearch_queries[k] += static_cast<double>(row.binsearch_queries);
      agg.mean_standard_queries[k] += standard_search_queries(row.delta);
      agg.mean_delta[k] += row.delta;
      ++agg.runs[k];
      ++k;
    }
  }
  for (std::size_t k = 0; k < agg.runs.size(); ++k) {
    const auto n = static_cast<double>(agg.runs[k]);
    agg.mean_ratio[k] /= n;
    agg.mean_binsearch_queries[k] /= n;
    agg.mean_standard_queries[k] /= n;
    agg.mean_delta[k] /= n;
  }
  return agg;
}

inline std::string sanitize_filename(std::string s) {
  for (auto& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')) c = '_';
  }
  return s;
}

inline void write_trace_csv(const AttackResult& res, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "t,queries_used,g_best,accepted,ratio,binsearch_queries,delta\n";
  out << std::setprecision(17);
  for (const auto& row : res.trace.rows) {
    out << row.t << ',' << row.queries_used << ',' << row.g_best << ',' << (row.accepted ? 1 : 0) << ',';
    if (row.accepted) out << row.ratio;
    out << ',' << row.binsearch_queries << ',' << row.delta << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// One CSV per run plus aggregate_ratio.csv / aggregate_binsearch.csv.
inline std::vector<std::filesystem::path> emit_traces(const std::vector<RunRecord>& runs,
                                                      const std::filesystem::path& out_dir) {
  if (runs.empty()) throw EmptyList("emit_traces: no runs");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  std::vector<AttackResult> ok;
  for (const auto& rec : runs) {
    if (!rec.success) continue;
    const auto path = out_dir / ("run_" + sanitize_filename(rec.model) + "_" + sanitize_filename(rec.config) + "_" +
                                 std::to_string(rec.sample_index) + ".csv");
    write_trace_csv(rec.result, path);
    written.push_back(path);
    ok.push_back(rec.result);
  }
  const TraceAggregate agg = aggregate_traces(ok);
  {
    const auto path = out_dir / "aggregate_ratio.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "acceptance,mean_ratio,mean_delta,runs\n" << std::setprecision(17);
    for (std::size_t k = 0; k < agg.runs.size(); ++k) {
      out << k << ',' << agg.mean_ratio[k] << ',' << agg.mean_delta[k] << ',' << agg.runs[k] << '\n';
    }
    written.push_back(path);
  }
  {
    const auto path = out_dir / "aggregate_binsearch.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "acceptance,mean_binsearch_queries,mean_standard_queries,runs\n" << std::setprecision(17);
    for (std::size_t k = 0; k < agg.runs.size(); ++k) {
      out << k << ',' << agg.mean_binsearch_queries[k] << ',' << agg.mean_standard_queries[k] << ',' << agg.runs[k]
          << '\n';
    }
    written.push_back(path);
  }
  return written;
}

// Queries spent during initialization plus one per iteration plus binary
// search probes; must equal the ledger count.
inline std::uint64_t reconciled_queries(const AttackTrace& trace) {
  std::uint64_t q = trace.init_queries;
  for (const auto& row : trace.rows) q += 1 + row.binsearch_queries;
  return q;
}

}  // namespace deltabound
