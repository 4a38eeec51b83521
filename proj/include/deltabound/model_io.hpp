#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "deltabound/errors.hpp"
#include "deltabound/model_spec.hpp"

// Interchange format (format_version 1):
//
//   {"format_version": 1, "family": "<family>", "n_classes": K,
//    "n_features": d, "params": {...}}
//
// params by family (tree = {"feature", "threshold", "left", "right", "value"}
// parallel arrays, leaves have left = right = -1):
//   logreg   {"coef": [[d] x S], "intercept": [S]}       S = 1 if K == 2 else K
//   dtree    {"tree": tree}                               leaf value = class
//   rforest  {"trees": [tree, ...]}                       leaf value = class
//   gboost   {"learning_rate": r, "init_score": [S],
//             "stages": [[tree x S], ...]}                leaf value = raw score
//   adaboost {"estimators": [tree, ...], "estimator_weights": [...]}
//   mnb      {"class_log_prior": [K], "feature_log_prob": [[d] x K]}
//   mlp      {"layers": [{"weights": [[in] x out], "bias": [out],
//                         "activation": "relu" | "identity"}, ...]}
//
// Reals are written with 17 significant digits so a load/save cycle is
// byte-stable.

namespace deltabound {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace io_detail {

inline void require_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  std::set<std::string> expected;
  for (const char* k : keys) {
    expected.insert(k);
    if (!j.contains(k)) throw SchemaError(where + ": missing field \"" + std::string(k) + "\"");
  }
  for (const auto& item : j.items()) {
    if (!expected.count(item.key())) throw SchemaError(where + ": unexpected field \"" + item.key() + "\"");
  }
}

inline double get_real(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where + ": expected a number");
  return j.get<double>();
}

inline long long get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SchemaError(where + ": expected an integer");
  return j.get<long long>();
}

inline std::vector<double> get_reals(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(get_real(v, where));
  return out;
}

inline std::vector<int> get_ints(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(static_cast<int>(get_int(v, where)));
  return out;
}

inline std::vector<std::vector<double>> get_matrix(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : j) out.push_back(get_reals(row, where));
  return out;
}

inline const json& get_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array");
  return j;
}

inline json tree_to_json(const Tree& t) {
  return json{{"feature", t.feature},
              {"threshold", t.threshold},
              {"left", t.left},
              {"right", t.right},
              {"value", t.value}};
}

inline Tree tree_from_json(const json& j, const std::string& where) {
  require_keys(j, {"feature", "threshold", "left", "right", "value"}, where);
  Tree t;
  t.feature = get_ints(j["feature"], where + ".feature");
  t.threshold = get_reals(j["threshold"], where + ".threshold");
  t.left = get_ints(j["left"], where + ".left");
  t.right = get_ints(j["right"], where + ".right");
  t.value = get_reals(j["value"], where + ".value");
  return t;
}

inline std::vector<Tree> trees_from_json(const json& j, const std::string& where) {
  std::vector<Tree> out;
  for (const auto& t : get_array(j, where)) out.push_back(tree_from_json(t, where + "[]"));
  return out;
}

inline void write_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void write(std::string& out, const json& j) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& item : j.items()) {
        if (!first) out += ", ";
        first = false;
        out += json(item.key()).dump();
        out += ": ";
        write(out, item.value());
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        write(out, j[i]);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: write_number(out, j.get<double>()); break;
    default: out += j.dump(); break;
  }
}

}  // namespace io_detail

// Serializes JSON writing every real with %.17g.
inline std::string dump_json(const json& j) {
  std::string out;
  io_detail::write(out, j);
  out += '\n';
  return out;
}

inline json to_json(const ModelSpec& m) {
  json params = std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        using io_detail::tree_to_json;
        if constexpr (std::is_same_v<P, LogRegParams>) {
          return {{"coef", p.coef}, {"intercept", p.intercept}};
        } else if constexpr (std::is_same_v<P, DTreeParams>) {
          return {{"tree", tree_to_json(p.tree)}};
        } else if constexpr (std::is_same_v<P, RForestParams>) {
          json trees = json::array();
          for (const auto& t : p.trees) trees.push_back(tree_to_json(t));
          return {{"trees", trees}};
        } else if constexpr (std::is_same_v<P, GBoostParams>) {
          json stages = json::array();
          for (const auto& stage : p.stages) {
            json s = json::array();
            for (const auto& t : stage) s.push_back(tree_to_json(t));
            stages.push_back(s);
          }
          return {{"learning_rate", p.learning_rate}, {"init_score", p.init_score}, {"stages", stages}};
        } else if constexpr (std::is_same_v<P, AdaBoostParams>) {
          json trees = json::array();
          for (const auto& t : p.estimators) trees.push_back(tree_to_json(t));
          return {{"estimators", trees}, {"estimator_weights", p.estimator_weights}};
        } else if constexpr (std::is_same_v<P, MnbParams>) {
          return {{"class_log_prior", p.class_log_prior}, {"feature_log_prob", p.feature_log_prob}};
        } else {
          json layers = json::array();
          for (const auto& l : p.layers) {
            layers.push_back({{"weights", l.weights},
                              {"bias", l.bias},
                              {"activation", l.activation == Activation::relu ? "relu" : "identity"}});
          }
          return {{"layers", layers}};
        }
      },
      m.params);
  return {{"format_version", kFormatVersion},
          {"family", std::string(family_name(m.family))},
          {"n_classes", m.n_classes},
          {"n_features", m.n_features},
          {"params", params}};
}

// Parses and validates. SchemaError for shape/type problems, MalformedModel
// for structural invariant violations.
inline ModelSpec model_from_json(const json& j) {
  using namespace io_detail;
  require_keys(j, {"format_version", "family", "n_classes", "n_features", "params"}, "model");
  if (get_int(j["format_version"], "format_version") != kFormatVersion) {
    throw SchemaError("unsupported format_version");
  }
  if (!j["family"].is_string()) throw SchemaError("family: expected a string");
  ModelSpec m;
  m.family = parse_family(j["family"].get<std::string>());
  const long long k = get_int(j["n_classes"], "n_classes");
  const long long d = get_int(j["n_features"], "n_features");
  if (k < 2) throw MalformedModel("n_classes must be >= 2");
  if (d < 1) throw MalformedModel("n_features must be >= 1");
  m.n_classes = static_cast<int>(k);
  m.n_features = static_cast<std::size_t>(d);
  const json& p = j["params"];
  switch (m.family) {
    case Family::logreg:
      require_keys(p, {"coef", "intercept"}, "params");
      m.params = LogRegParams{get_matrix(p["coef"], "coef"), get_reals(p["intercept"], "intercept")};
      break;
    case Family::dtree:
      require_keys(p, {"tree"}, "params");
      m.params = DTreeParams{tree_from_json(p["tree"], "tree")};
      break;
    case Family::rforest:
      require_keys(p, {"trees"}, "params");
      m.params = RForestParams{trees_from_json(p["trees"], "trees")};
      break;
    case Family::gboost: {
      require_keys(p, {"learning_rate", "init_score", "stages"}, "params");
      GBoostParams g;
      g.learning_rate = get_real(p["learning_rate"], "learning_rate");
      g.init_score = get_reals(p["init_score"], "init_score");
      for (const auto& stage : get_array(p["stages"], "stages")) {
        g.stages.push_back(trees_from_json(stage, "stages[]"));
      }
      m.params = std::move(g);
      break;
    }
    case Family::adaboost:
      require_keys(p, {"estimators", "estimator_weights"}, "params");
      m.params = AdaBoostParams{trees_from_json(p["estimators"], "estimators"),
                                get_reals(p["estimator_weights"], "estimator_weights")};
      break;
    case Family::mnb:
      require_keys(p, {"class_log_prior", "feature_log_prob"}, "params");
      m.params = MnbParams{get_reals(p["class_log_prior"], "class_log_prior"),
                           get_matrix(p["feature_log_prob"], "feature_log_prob")};
      break;
    case Family::mlp: {
      require_keys(p, {"layers"}, "params");
      MlpParams mlp;
      for (const auto& l : get_array(p["layers"], "layers")) {
        require_keys(l, {"weights", "bias", "activation"}, "layer");
        DenseLayer layer;
        layer.weights = get_matrix(l["weights"], "weights");
        layer.bias = get_reals(l["bias"], "bias");
        if (!l["activation"].is_string()) throw SchemaError("activation: expected a string");
        const auto act = l["activation"].get<std::string>();
        if (act == "relu") {
          layer.activation = Activation::relu;
        } else if (act == "identity") {
          layer.activation = Activation::identity;
        } else {
          throw SchemaError("activation: unknown value '" + act + "'");
        }
        mlp.layers.push_back(std::move(layer));
      }
      m.params = std::move(mlp);
      break;
    }
  }
  validate(m);
  return m;
}

inline ModelSpec parse_model_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline std::string serialize_model_spec(const ModelSpec& m) { return dump_json(to_json(m)); }

inline ModelSpec load_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_spec(ss.str());
}

inline void save_model_spec(const ModelSpec& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << serialize_model_spec(m);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace deltabound
