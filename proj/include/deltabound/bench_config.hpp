#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deltabound/bench.hpp"
#include "deltabound/config_io.hpp"
#include "deltabound/dataset.hpp"
#include "deltabound/errors.hpp"
#include "deltabound/model_io.hpp"
#include "deltabound/trainers.hpp"

// Benchmark definition file:
//
//   {"dataset": {"path": "data/wdbc.csv", "label_column": "diagnosis",
//                "ignore_columns": ["id"], "positive_label": "M"?},
//    "models": ["model.json", {"train": "gboost", "hyper": {...}, "name": "gbt"}],
//    "attack_configs": ["const-log-0.1", {"p_schedule": "const", ...}],
//    "n_samples": 86, "budget": 500, "seed": 0}
//
// Relative paths are resolved against the directory holding the file.

namespace deltabound {

struct ModelEntry {
  std::string name;
  std::optional<std::filesystem::path> path;
  std::optional<Family> train_family;
  TrainHyper hyper;
};

struct BenchConfig {
  std::filesystem::path dataset_path;
  CsvOptions csv;
  std::vector<ModelEntry> models;
  std::vector<NamedAttackConfig> attack_configs;
  std::size_t n_samples = 86;
  std::uint64_t budget = 500;
  std::uint64_t seed = 0;
  nlohmann::json raw;
};

inline BenchConfig bench_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using nlohmann::json;
  BenchConfig cfg;
  cfg.raw = j;
  try {
    if (!j.is_object()) throw InvalidArgument("bench config must be a JSON object");
    for (const char* key : {"dataset", "models", "attack_configs"}) {
      if (!j.contains(key)) throw InvalidArgument(std::string("bench config: missing \"") + key + "\"");
    }
    const json& ds = j["dataset"];
    cfg.dataset_path = ds.at("path").get<std::string>();
    if (cfg.dataset_path.is_relative()) cfg.dataset_path = base_dir / cfg.dataset_path;
    cfg.csv.label_column = ds.at("label_column").get<std::string>();
    if (ds.contains("ignore_columns")) cfg.csv.ignore_columns = ds["ignore_columns"].get<std::vector<std::string>>();
    if (ds.contains("positive_label")) cfg.csv.positive_label = ds["positive_label"].get<std::string>();

    for (const auto& m : j["models"]) {
      ModelEntry e;
      if (m.is_string()) {
        std::filesystem::path p = m.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        e.name = p.stem().string();
        e.path = p;
      } else {
        e.train_family = parse_family(m.at("train").get<std::string>());
        e.hyper = train_hyper_from_json(m.value("hyper", json()));
        e.name = m.value("name", std::string(family_name(*e.train_family)));
      }
      cfg.models.push_back(std::move(e));
    }
    for (const auto& a : j["attack_configs"]) cfg.attack_configs.push_back(attack_config_from_json(a));
    cfg.n_samples = j.value("n_samples", std::size_t{86});
    cfg.budget = j.value("budget", std::uint64_t{500});
    cfg.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bench config: ") + e.what());
  }
  if (cfg.models.empty()) throw InvalidArgument("bench config: no models");
  if (cfg.attack_configs.empty()) throw InvalidArgument("bench config: no attack configs");
  return cfg;
}

inline BenchConfig load_bench_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bench config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("bench config " + path.string() + ": " + e.what());
  }
  return bench_config_from_json(j, path.parent_path());
}

// Loads or trains every model. Training uses derive_seed(seed, position).
inline std::vector<NamedModel> materialize_models(const BenchConfig& cfg, const LabeledDataset& data) {
  std::vector<NamedModel> out;
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    const auto& e = cfg.models[i];
    if (e.path) {
      out.push_back({e.name, load_model_spec(*e.path)});
    } else {
      out.push_back({e.name, train_tabular_model(*e.train_family, data, e.hyper, derive_seed(cfg.seed, i))});
    }
  }
  return out;
}

}  // namespace deltabound
