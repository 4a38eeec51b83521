#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "deltabound/deltabound.hpp"

using namespace deltabound;
namespace fs = std::filesystem;

namespace {

std::string wdbc_path() { return std::string(DB_DATA_DIR) + "/wdbc.csv"; }

CsvOptions wdbc_opts() {
  CsvOptions o;
  o.label_column = "diagnosis";
  o.ignore_columns = {"id"};
  return o;
}

const LabeledDataset& wdbc() {
  static const LabeledDataset d = load_csv_dataset(wdbc_path(), wdbc_opts());
  return d;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("deltabound_test_" + std::to_string(::getpid())) / name;
  fs::create_directories(dir.parent_path());
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

ModelSpec constant_model(std::size_t d, Label k) {
  ModelSpec m;
  m.family = Family::logreg;
  m.n_features = d;
  m.params = LogRegParams{{Vector(d, 0.0)}, {k == 1 ? 1.0 : -1.0}};
  return m;
}

}  // namespace

TEST(Csv, Wdbc) {
  const auto& d = wdbc();
  EXPECT_EQ(d.size(), 569u);
  EXPECT_EQ(d.dim(), 30u);
  EXPECT_EQ(d.n_classes, 2);
  EXPECT_NO_THROW(d.check());
}

TEST(Csv, ParseErrorCarriesLocation) {
  const auto p = write_file("bad.csv", "a,b,y\n1,2,x\n3,oops,z\n");
  try {
    load_csv_dataset(p, {"y", std::nullopt, {}});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
  }
  const auto ragged = write_file("ragged.csv", "a,b,y\n1,2\n");
  EXPECT_THROW(load_csv_dataset(ragged, {"y", std::nullopt, {}}), ParseError);
}

TEST(Csv, MissingColumns) {
  const auto p = write_file("ok.csv", "a,b,y\n1,2,x\n");
  EXPECT_THROW(load_csv_dataset(p, {"label", std::nullopt, {}}), MissingColumn);
  EXPECT_THROW(load_csv_dataset(p, {"y", std::nullopt, {"id"}}), MissingColumn);
  EXPECT_THROW(load_csv_dataset("/nonexistent.csv", {"y", std::nullopt, {}}), IoError);
}

TEST(Csv, QuotesCrlfAndPositiveLabel) {
  const auto p = write_file("q.csv", "\xEF\xBB\xBF\"a\",b,y\r\n\"1.5\",2,M\r\n3,4,B\r\n5,6,M\r\n");
  const auto d = load_csv_dataset(p, {"y", std::nullopt, {}});
  EXPECT_EQ(d.labels, (std::vector<Label>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(d.features[0][0], 1.5);
  const auto pos = load_csv_dataset(p, {"y", std::string("M"), {}});
  EXPECT_EQ(pos.labels, (std::vector<Label>{1, 0, 1}));
}

TEST(Select, EightySixDistinctAndDeterministic) {
  const auto& d = wdbc();
  TrainHyper h;
  h.max_depth = -1;
  const auto m = train_tabular_model(Family::dtree, d, h, 0);
  const auto a = select_eval_samples(m, d, 86, 5);
  const auto b = select_eval_samples(m, d, 86, 5);
  ASSERT_EQ(a.samples.size(), 86u);
  EXPECT_FALSE(a.shortfall());
  std::set<std::size_t> idx;
  for (std::size_t i = 0; i < 86; ++i) {
    idx.insert(a.samples[i].index);
    EXPECT_EQ(a.samples[i].index, b.samples[i].index);
    EXPECT_EQ(predict(m, a.samples[i].x0), a.samples[i].y0);
  }
  EXPECT_EQ(idx.size(), 86u);
  const auto c = select_eval_samples(m, d, 86, 6);
  bool differs = false;
  for (std::size_t i = 0; i < 86; ++i) differs |= c.samples[i].index != a.samples[i].index;
  EXPECT_TRUE(differs);
}

TEST(Select, ShortfallAndEmptyPool) {
  const auto& d = wdbc();
  const auto m = train_tabular_model(Family::logreg, d, {}, 0);
  const auto s = select_eval_samples(m, d, 600, 0);
  EXPECT_TRUE(s.shortfall());
  EXPECT_EQ(s.samples.size(), s.available);
  EXPECT_LT(s.available, 600u);

  LabeledDataset ones;
  ones.features = {{1.0}, {2.0}};
  ones.labels = {1, 1};
  ones.n_classes = 2;
  EXPECT_THROW(select_eval_samples(constant_model(1, 0), ones, 1, 0), NoCorrectPredictions);
}

TEST(AvgL2, Examples) {
  EXPECT_DOUBLE_EQ(avg_l2({{{0.0, 0.0}, {3.0, 4.0}}}), 5.0);
  EXPECT_DOUBLE_EQ(avg_l2({{{0.0, 0.0}, {3.0, 4.0}}, {{1.0, 1.0}, {1.0, 2.0}}}), 3.0);
  EXPECT_DOUBLE_EQ(avg_l2({{{2.0, 7.0}, {2.0, 7.0}}}), 0.0);
  EXPECT_THROW(avg_l2({}), EmptyList);
}

TEST(AvgL2Property, IdentityAttackIsZero) {
  std::vector<std::pair<Vector, Vector>> pairs;
  for (std::size_t i = 0; i < wdbc().size(); i += 10) pairs.push_back({wdbc().features[i], wdbc().features[i]});
  EXPECT_EQ(avg_l2(pairs), 0.0);
}

TEST(ConfigLabels, BothOrders) {
  const auto a = attack_config_from_label("const-log-0.1");
  EXPECT_EQ(a.p_schedule, PSchedule::constant);
  EXPECT_EQ(a.delta_kind, DeltaKind::log);
  EXPECT_DOUBLE_EQ(a.delta_factor, 0.1);
  const auto b = attack_config_from_label("log-0.01-const");
  EXPECT_EQ(b.p_schedule, PSchedule::constant);
  EXPECT_EQ(b.delta_kind, DeltaKind::log);
  EXPECT_DOUBLE_EQ(b.delta_factor, 0.01);
  EXPECT_THROW(attack_config_from_label("const-log"), InvalidArgument);
  EXPECT_THROW(attack_config_from_label("const-cubic-0.1"), InvalidArgument);
}

TEST(Bench, ZeroBudgetRecordsNoSuccesses) {
  const auto& d = wdbc();
  std::vector<NamedModel> models{{"lr", train_tabular_model(Family::logreg, d, {}, 0)}};
  BenchOptions o;
  o.n_samples = 5;
  o.budget = 0;
  const auto r = run_benchmark(models, d, {{"const-log-0.1", attack_config_from_label("const-log-0.1")}}, o);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].success_count, 0u);
  EXPECT_EQ(r.rows[0].failed_count, 5u);
  EXPECT_FALSE(r.rows[0].avg_l2.has_value());
  for (const auto& run : r.runs) EXPECT_EQ(run.result.queries_used, 0u);
}

TEST(Bench, ReproducibleAndJobIndependent) {
  const auto& d = wdbc();
  std::vector<NamedModel> models{{"dt", train_tabular_model(Family::dtree, d, {}, 0)},
                                 {"lr", train_tabular_model(Family::logreg, d, {}, 0)}};
  const std::vector<NamedAttackConfig> cfgs{{"const-log-0.1", attack_config_from_label("const-log-0.1")}};
  BenchOptions o;
  o.n_samples = 6;
  o.budget = 120;
  o.seed = 3;
  const auto a = run_benchmark(models, d, cfgs, o);
  o.jobs = 3;
  const auto b = run_benchmark(models, d, cfgs, o);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    ASSERT_TRUE(a.rows[i].avg_l2.has_value());
    EXPECT_EQ(*a.rows[i].avg_l2, *b.rows[i].avg_l2);
  }
  for (const auto& run : a.runs) {
    EXPECT_LE(run.result.queries_used, o.budget);
    if (run.success) {
      EXPECT_TRUE(run.verified);
      EXPECT_EQ(reconciled_queries(run.result.trace), run.result.queries_used);
    }
  }
}

TEST(Bench, DimensionMismatch) {
  ModelSpec m = constant_model(3, 0);
  EXPECT_THROW(run_benchmark({{"x", m}}, wdbc(), {{"c", AttackConfig{}}}, {}), DimensionMismatch);
}

TEST(Traces, ThreeAcceptancesAggregate) {
  AttackResult res;
  res.trace.init_queries = 5;
  const double deltas[] = {0.9, 0.92, 0.93, 0.94};
  const double ratios[] = {0.8, 0.0, 0.85, 0.9};
  double g = 1.0;
  std::uint64_t q = 5;
  for (std::size_t t = 0; t < 4; ++t) {
    TraceRow row;
    row.t = t;
    row.delta = deltas[t];
    row.accepted = ratios[t] > 0.0;
    q += 1;
    if (row.accepted) {
      row.ratio = ratios[t];
      row.binsearch_queries = 2;
      q += 2;
      g *= ratios[t];
    }
    row.g_best = g;
    row.queries_used = q;
    res.trace.rows.push_back(row);
  }
  res.queries_used = q;
  res.distance = g;
  EXPECT_EQ(reconciled_queries(res.trace), q);

  RunRecord rec;
  rec.model = "m/x";
  rec.config = "const-log-0.1";
  rec.sample_index = 4;
  rec.success = true;
  rec.result = res;
  const auto dir = scratch("traces");
  const auto files = emit_traces({rec}, dir);
  ASSERT_EQ(files.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "run_m_x_const-log-0.1_4.csv"));

  const auto agg = aggregate_traces({res});
  ASSERT_EQ(agg.mean_ratio.size(), 3u);
  EXPECT_LE(agg.mean_ratio[0], agg.mean_delta[0]);
  EXPECT_LE(agg.mean_ratio[1], agg.mean_delta[1]);
  EXPECT_LE(agg.mean_ratio[2], agg.mean_delta[2]);

  std::ifstream in(dir / "aggregate_ratio.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4);
  EXPECT_THROW(emit_traces({}, dir), EmptyList);
}

TEST(Traces, StandardSearchCount) {
  EXPECT_EQ(standard_search_queries(0.9), 4.0);
  EXPECT_EQ(standard_search_queries(0.99), 7.0);
  EXPECT_EQ(standard_search_queries(0.5), 2.0);
}

TEST(BenchConfig, ResolvesRelativePathsAndTrainsModels) {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  fs::copy_file(wdbc_path(), dir / "wdbc.csv", fs::copy_options::overwrite_existing);
  save_model_spec(train_tabular_model(Family::logreg, wdbc(), {}, 0), dir / "lr.json");
  std::ofstream(dir / "bench.json") << R"({
    "dataset": {"path": "wdbc.csv", "label_column": "diagnosis", "ignore_columns": ["id"]},
    "models": ["lr.json", {"train": "dtree", "hyper": {"max_depth": 3}, "name": "dt3"}],
    "attack_configs": ["const-log-0.1", {"p_schedule": "const", "delta_schedule": "log", "delta_factor": 0.01}],
    "n_samples": 4, "budget": 50, "seed": 2})";
  const auto cfg = load_bench_config(dir / "bench.json");
  EXPECT_EQ(cfg.dataset_path, dir / "wdbc.csv");
  ASSERT_EQ(cfg.models.size(), 2u);
  EXPECT_EQ(cfg.models[0].name, "lr");
  EXPECT_EQ(cfg.models[1].name, "dt3");
  EXPECT_EQ(cfg.attack_configs[1].label, "const-log-0.01");
  EXPECT_EQ(cfg.n_samples, 4u);

  const auto data = load_csv_dataset(cfg.dataset_path, cfg.csv);
  const auto models = materialize_models(cfg, data);
  EXPECT_EQ(models[1].model.family, Family::dtree);

  EXPECT_THROW(load_bench_config(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << R"({"models": []})";
  EXPECT_THROW(load_bench_config(dir / "bad.json"), InvalidArgument);
}
