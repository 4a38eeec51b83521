#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deltabound/attack.hpp"
#include "deltabound/bench.hpp"
#include "deltabound/bench_config.hpp"
#include "deltabound/config_io.hpp"
#include "deltabound/dataset.hpp"
#include "deltabound/errors.hpp"
#include "deltabound/model_io.hpp"
#include "deltabound/update_probability.hpp"
#include "deltabound/toy2d.hpp"
#include "deltabound/trainers.hpp"

namespace deltabound {

enum class Command { train, attack, bench, toy2d, validate_theorem1 };

struct CliOptions {
  // shared
  std::string format = "text";
  std::uint64_t seed = 0;
  std::string config;
  std::uint64_t budget = 0;

  // train
  std::string family;
  std::string data;
  std::string label_col = "diagnosis";
  std::vector<std::string> ignore_cols{"id"};
  std::string positive_label;
  std::string out;

  // attack
  std::string model;
  long long index = -1;
  std::string point;
  std::string trace_out;
  bool predict_only = false;

  // bench
  std::string out_dir;
  unsigned jobs = 0;
  std::size_t n_samples = 0;

  // toy2d
  std::string fn = "f1";
  std::size_t seeds = 20;

  // validate-theorem1
  std::size_t dim = 10;
  double delta = 0.99;
  double p = 0.05;
  std::size_t samples = 1000000;
  double g0 = 1.0;
  double grad_norm = 0.1;
};

struct CliInvocation {
  Command command = Command::train;
  CliOptions opts;
  std::vector<std::string> given;  // long names of flags present on the command line
  std::string help;                // non-empty when --help was requested

  bool has(const std::string& flag) const { return std::find(given.begin(), given.end(), flag) != given.end(); }
};

namespace cli_detail {

inline const char* kSubcommands = "train, attack, bench, toy2d, validate-theorem1";

struct Parser {
  CLI::App app{"deltabound: hard-label black-box attack toolkit", "deltabound"};
  CliOptions opts;
  std::vector<CLI::App*> subs;

  void add_common(CLI::App* s, bool with_seed = true) {
    s->add_option("--format", opts.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    if (with_seed) s->add_option("--seed", opts.seed, "Master seed");
  }

  Parser() {
    app.require_subcommand(1, 1);
    app.fallthrough(false);

    auto* train = app.add_subcommand("train", "Train a victim model on a CSV dataset");
    train->add_option("--family", opts.family, "logreg|dtree|rforest|gboost|adaboost|mnb")->required();
    train->add_option("--data", opts.data, "CSV dataset")->required();
    train->add_option("--label-col", opts.label_col, "Label column");
    train->add_option("--ignore-cols", opts.ignore_cols, "Columns to drop")->delimiter(',');
    train->add_option("--positive-label", opts.positive_label, "Label value mapped to class 1");
    train->add_option("--out", opts.out, "Output model JSON")->required();
    train->add_option("--config", opts.config, "Hyperparameter JSON file");
    add_common(train);

    auto* attack = app.add_subcommand("attack", "Attack one point, or predict it with --predict");
    attack->add_option("--model", opts.model, "Model JSON")->required();
    attack->add_option("--data", opts.data, "CSV dataset for --index");
    attack->add_option("--label-col", opts.label_col, "Label column");
    attack->add_option("--ignore-cols", opts.ignore_cols, "Columns to drop")->delimiter(',');
    attack->add_option("--positive-label", opts.positive_label, "Label value mapped to class 1");
    auto* idx = attack->add_option("--index", opts.index, "Row of --data to attack");
    auto* pt = attack->add_option("--point", opts.point, "Comma-separated feature values");
    idx->excludes(pt);
    attack->add_option("--budget", opts.budget, "Query budget");
    attack->add_option("--config", opts.config, "Attack config JSON file or label such as const-log-0.05");
    attack->add_option("--trace-out", opts.trace_out, "Write the iteration trace CSV here");
    attack->add_flag("--predict", opts.predict_only, "Only print the model's label for the point");
    add_common(attack);

    auto* bench = app.add_subcommand("bench", "Run a benchmark definition");
    bench->add_option("--config", opts.config, "Benchmark JSON")->required();
    bench->add_option("--out-dir", opts.out_dir, "Directory for report.json and traces");
    bench->add_option("--jobs", opts.jobs, "Worker threads (default: processors)");
    bench->add_option("--budget", opts.budget, "Override the config budget");
    bench->add_option("--n-samples", opts.n_samples, "Override the number of evaluation points");
    add_common(bench);

    auto* toy = app.add_subcommand("toy2d", "Attack the origin of a 2-D toy classifier");
    toy->add_option("--fn", opts.fn, "f1|f2|f3|f4")->check(CLI::IsMember({"f1", "f2", "f3", "f4"}));
    toy->add_option("--budget", opts.budget, "Query budget per run (default 300)");
    toy->add_option("--seeds", opts.seeds, "Number of runs");
    toy->add_option("--config", opts.config, "Attack config JSON file or label");
    add_common(toy);

    auto* th = app.add_subcommand("validate-theorem1", "Monte-Carlo check of the update probability");
    th->add_option("--dim", opts.dim, "Dimension");
    th->add_option("--delta", opts.delta, "Acceptance factor");
    th->add_option("--p", opts.p, "Perturbation scale");
    th->add_option("--samples", opts.samples, "Monte-Carlo draws");
    th->add_option("--g0", opts.g0, "Boundary distance at theta");
    th->add_option("--grad-norm", opts.grad_norm, "Gradient norm of g");
    add_common(th);

    subs = {train, attack, bench, toy, th};
  }
};

inline Command command_from_name(const std::string& name) {
  if (name == "train") return Command::train;
  if (name == "attack") return Command::attack;
  if (name == "bench") return Command::bench;
  if (name == "toy2d") return Command::toy2d;
  return Command::validate_theorem1;
}

}  // namespace cli_detail

// argv excludes the program name.
inline CliInvocation parse_args(const std::vector<std::string>& argv) {
  using namespace cli_detail;
  if (argv.empty()) throw UsageError(std::string("missing subcommand; expected one of: ") + kSubcommands);
  const std::string& first = argv.front();
  if (first == "--help" || first == "-h") {
    Parser p;
    CliInvocation inv;
    inv.help = p.app.help();
    return inv;
  }
  if (first.rfind("-", 0) != 0) {
    static const std::vector<std::string> known{"train", "attack", "bench", "toy2d", "validate-theorem1"};
    if (std::find(known.begin(), known.end(), first) == known.end()) {
      throw UsageError("unknown subcommand '" + first + "'; expected one of: " + kSubcommands);
    }
  }

  Parser p;
  std::vector<std::string> rev(argv.rbegin(), argv.rend());
  try {
    p.app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    CliInvocation inv;
    for (auto* s : p.subs) {
      if (s->parsed()) inv.help = s->help();
    }
    if (inv.help.empty()) inv.help = p.app.help();
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  CliInvocation inv;
  inv.opts = p.opts;
  for (auto* s : p.subs) {
    if (!s->parsed()) continue;
    inv.command = command_from_name(s->get_name());
    for (const CLI::Option* o : s->get_options()) {
      if (o->count() > 0) {
        std::string name = o->get_name();
        while (!name.empty() && name.front() == '-') name.erase(name.begin());
        inv.given.push_back(name);
      }
    }
  }
  if (inv.command == Command::attack && !inv.has("index") && !inv.has("point")) {
    throw UsageError("attack needs --index (with --data) or --point");
  }
  if (inv.command == Command::attack && inv.has("index") && !inv.has("data")) {
    throw UsageError("--index requires --data");
  }
  return inv;
}

namespace cli_detail {

inline CsvOptions csv_options(const CliInvocation& inv) {
  CsvOptions o;
  o.label_column = inv.opts.label_col;
  o.ignore_columns = inv.opts.ignore_cols;
  if (inv.has("positive-label")) o.positive_label = inv.opts.positive_label;
  return o;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

// A path to a JSON file, or a label like "const-log-0.05".
inline NamedAttackConfig resolve_attack_config(const CliInvocation& inv) {
  NamedAttackConfig named{"const-log-0.05", AttackConfig{}};
  if (inv.has("config")) {
    const std::string& c = inv.opts.config;
    if (std::filesystem::exists(c)) {
      named = attack_config_from_json(read_json_file(c));
    } else if (c.size() > 5 && c.substr(c.size() - 5) == ".json") {
      throw IoError("cannot open attack config " + c);
    } else {
      named = {c, attack_config_from_label(c)};
    }
  }
  if (inv.has("budget")) named.config.budget = inv.opts.budget;
  if (inv.has("seed")) named.config.seed = inv.opts.seed;
  return named;
}

inline Vector parse_point(const std::string& s) {
  Vector x;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double v = 0.0;
    if (!config_detail::parse_number(csv_detail::trim(tok), v)) throw InvalidArgument("--point: bad number '" + tok + "'");
    x.push_back(v);
  }
  if (x.empty()) throw InvalidArgument("--point is empty");
  return x;
}

inline std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

inline nlohmann::json vector_json(const Vector& v) { return nlohmann::json(v); }

inline int run_train(const CliInvocation& inv, std::ostream& out) {
  const auto& o = inv.opts;
  const Family fam = parse_family(o.family);
  const auto data = load_csv_dataset(o.data, csv_options(inv));
  TrainHyper hyper;
  if (inv.has("config")) hyper = train_hyper_from_json(read_json_file(o.config));
  const auto model = train_tabular_model(fam, data, hyper, o.seed);
  save_model_spec(model, o.out);
  const double acc = training_accuracy(model, data);
  if (o.format == "json") {
    out << nlohmann::json{{"family", o.family}, {"rows", data.size()}, {"features", data.dim()},
                          {"train_accuracy", acc}, {"out", o.out}}
               .dump()
        << "\n";
  } else {
    out << "trained " << o.family << " on " << data.size() << " rows x " << data.dim()
        << " features, training accuracy " << fmt(acc, 4) << "\n"
        << "wrote " << o.out << "\n";
  }
  return 0;
}

inline int run_attack_cmd(const CliInvocation& inv, std::ostream& out) {
  const auto& o = inv.opts;
  const ModelSpec model = load_model_spec(o.model);
  Vector x0;
  Label y0 = 0;
  if (inv.has("point")) {
    x0 = parse_point(o.point);
    if (x0.size() != model.n_features) {
      throw DimensionMismatch("--point has " + std::to_string(x0.size()) + " values, model expects " +
                              std::to_string(model.n_features));
    }
    y0 = predict(model, x0);
  } else {
    const auto data = load_csv_dataset(o.data, csv_options(inv));
    if (o.index < 0 || static_cast<std::size_t>(o.index) >= data.size()) {
      throw InvalidArgument("--index " + std::to_string(o.index) + " outside [0, " + std::to_string(data.size()) + ")");
    }
    x0 = data.features[static_cast<std::size_t>(o.index)];
    y0 = data.labels[static_cast<std::size_t>(o.index)];
    if (x0.size() != model.n_features) throw DimensionMismatch("dataset and model feature counts differ");
  }

  if (o.predict_only) {
    const Label y = predict(model, x0);
    if (o.format == "json") {
      out << nlohmann::json{{"label", y}}.dump() << "\n";
    } else {
      out << y << "\n";
    }
    return 0;
  }

  const auto named = resolve_attack_config(inv);
  DecisionOracle oracle(as_label_fn(model), model.n_features, named.config.budget);
  const AttackResult res = run_attack(oracle, x0, y0, named.config);
  const Label adv = predict(model, res.adversarial_point);
  if (!o.trace_out.empty()) write_trace_csv(res, o.trace_out);

  if (o.format == "json") {
    out << nlohmann::json{{"config", named.label},
                          {"y0", y0},
                          {"adversarial_label", adv},
                          {"verified", adv != y0},
                          {"distance", res.distance},
                          {"queries_used", res.queries_used},
                          {"init_queries", res.trace.init_queries},
                          {"adversarial_point", vector_json(res.adversarial_point)}}
               .dump()
        << "\n";
  } else {
    out << "config " << named.label << ", budget " << named.config.budget << ", seed " << named.config.seed << "\n"
        << "label " << y0 << " -> " << adv << (adv != y0 ? " (verified)" : " (NOT adversarial)") << "\n"
        << "distance " << fmt(res.distance) << " after " << res.queries_used << " queries\n";
  }
  return 0;
}

inline int run_bench_cmd(const CliInvocation& inv, std::ostream& out) {
  const auto& o = inv.opts;
  BenchConfig cfg = load_bench_config(o.config);
  BenchOptions bo;
  bo.n_samples = inv.has("n-samples") ? o.n_samples : cfg.n_samples;
  bo.budget = inv.has("budget") ? o.budget : cfg.budget;
  bo.seed = inv.has("seed") ? o.seed : cfg.seed;
  cfg.seed = bo.seed;
  bo.jobs = inv.has("jobs") ? o.jobs : std::max(1u, std::thread::hardware_concurrency());
  if (bo.jobs == 0) throw InvalidArgument("--jobs must be >= 1");

  const auto data = load_csv_dataset(cfg.dataset_path, cfg.csv);
  const auto models = materialize_models(cfg, data);
  BenchReport report = run_benchmark(models, data, cfg.attack_configs, bo);
  report.config = cfg.raw;

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report_to_json(report)["rows"]) rows.push_back(r);
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    const auto report_path = std::filesystem::path(o.out_dir) / "report.json";
    std::ofstream rf(report_path);
    if (!rf) throw IoError("cannot write " + report_path.string());
    rf << report_to_json(report).dump(2) << "\n";
    emit_traces(report.runs, std::filesystem::path(o.out_dir) / "traces");
  }
  if (o.format == "json") {
    out << nlohmann::json{{"seed", bo.seed}, {"budget", bo.budget}, {"rows", rows}}.dump() << "\n";
  } else {
    out << report_table(report);
  }
  return 0;
}

inline int run_toy_cmd(const CliInvocation& inv, std::ostream& out) {
  const auto& o = inv.opts;
  const Toy2D fn = parse_toy2d(o.fn);
  CliInvocation adj = inv;
  if (!inv.has("budget")) {
    adj.opts.budget = 300;
    adj.given.push_back("budget");
  }
  auto named = resolve_attack_config(adj);
  if (o.seeds == 0) throw InvalidArgument("--seeds must be >= 1");
  const Vector x0{0.0, 0.0};
  const Label y0 = toy2d_classify(fn, 0.0, 0.0);
  std::vector<double> dist;
  std::size_t failed = 0;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    AttackConfig cfg = named.config;
    cfg.seed = o.seed + s;
    DecisionOracle oracle(toy2d_label_fn(fn), 2, cfg.budget);
    try {
      dist.push_back(run_attack(oracle, x0, y0, cfg).distance);
    } catch (const InitializationFailed&) {
      ++failed;
    }
  }
  if (dist.empty()) throw InitializationFailed("no run found a boundary");
  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const bool has_opt = fn == Toy2D::f1;
  const double optimum = 0.1 / std::sqrt(2.0);

  if (o.format == "json") {
    nlohmann::json j{{"fn", o.fn}, {"config", named.label}, {"budget", named.config.budget},
                     {"runs", o.seeds}, {"failed", failed}, {"median", median}, {"distances", dist}};
    j["optimum"] = has_opt ? nlohmann::json(optimum) : nlohmann::json(nullptr);
    out << j.dump() << "\n";
  } else {
    out << o.fn << " " << named.label << ", budget " << named.config.budget << ", " << o.seeds << " runs";
    if (failed) out << " (" << failed << " failed)";
    out << "\nmedian distance " << fmt(median) << "\n";
    if (has_opt) out << "optimum " << fmt(optimum, 4) << " (ratio " << fmt(median / optimum, 4) << ")\n";
  }
  return 0;
}

inline int run_update_probability_cmd(const CliInvocation& inv, std::ostream& out) {
  const auto& o = inv.opts;
  if (o.dim == 0) throw InvalidArgument("--dim must be >= 1");
  Vector w(o.dim, 0.0);
  w[0] = o.grad_norm;
  Rng rng(o.seed);
  const auto r = validate_theorem1(o.g0, w, o.delta, o.p, o.samples, rng);
  if (o.format == "json") {
    out << nlohmann::json{{"empirical", r.empirical}, {"predicted", r.predicted}, {"samples", o.samples}}.dump()
        << "\n";
  } else {
    out << "empirical " << fmt(r.empirical, 5) << "\npredicted " << fmt(r.predicted, 5) << "\n";
  }
  return 0;
}

}  // namespace cli_detail

inline int dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  if (!inv.help.empty()) {
    out << inv.help;
    return 0;
  }
  try {
    switch (inv.command) {
      case Command::train: return run_train(inv, out);
      case Command::attack: return run_attack_cmd(inv, out);
      case Command::bench: return run_bench_cmd(inv, out);
      case Command::toy2d: return run_toy_cmd(inv, out);
      case Command::validate_theorem1: return run_update_probability_cmd(inv, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliInvocation inv;
  try {
    inv = parse_args(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }
  return dispatch(inv, out, err);
}

}  // namespace deltabound
