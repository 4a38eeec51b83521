#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deltabound/attack.hpp"
#include "deltabound/errors.hpp"
#include "deltabound/sampling.hpp"
#include "deltabound/trainers.hpp"

namespace deltabound {

using nlohmann::json;

struct NamedAttackConfig {
  std::string label;
  AttackConfig config;
};

namespace config_detail {

inline bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace config_detail

// Short labels name the p(t) schedule, delta schedule and factor in either
// order: "const-log-0.1" (p first) or "log-0.01-const" (delta first).
inline AttackConfig attack_config_from_label(const std::string& label) {
  const auto parts = config_detail::split(label, '-');
  if (parts.size() != 3) throw InvalidArgument("attack config label '" + label + "' is not <p>-<delta>-<C>");
  AttackConfig cfg;
  double c = 0.0;
  if (config_detail::parse_number(parts[2], c)) {
    cfg.p_schedule = parse_p_schedule(parts[0]);
    cfg.delta_kind = parse_delta_kind(parts[1]);
  } else if (config_detail::parse_number(parts[1], c)) {
    cfg.delta_kind = parse_delta_kind(parts[0]);
    cfg.p_schedule = parse_p_schedule(parts[2]);
  } else {
    throw InvalidArgument("attack config label '" + label + "' has no numeric delta factor");
  }
  cfg.delta_factor = c;
  return cfg;
}

inline std::string attack_config_label(const AttackConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", cfg.delta_factor);
  return std::string(p_schedule_name(cfg.p_schedule)) + "-" + std::string(delta_kind_name(cfg.delta_kind)) + "-" + buf;
}

inline SamplerConfig sampler_from_json(const json& j) {
  SamplerConfig s;
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw InvalidArgument("sampler: expected an object with a string \"kind\"");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "normal") {
    s.kind = SamplerKind::normal;
  } else if (kind == "dct") {
    s.kind = SamplerKind::dct;
    s.rho = j.value("rho", 1.0);
    if (!j.contains("shape") || !j["shape"].is_array() || j["shape"].size() != 3) {
      throw InvalidArgument("dct sampler needs \"shape\": [channels, height, width]");
    }
    s.shape = {j["shape"][0].get<std::size_t>(), j["shape"][1].get<std::size_t>(), j["shape"][2].get<std::size_t>()};
  } else {
    throw InvalidArgument("sampler: unknown kind '" + kind + "'");
  }
  s.check();
  return s;
}

// Accepts either a label string or an object
//   {"label"?, "p_schedule", "delta_schedule", "delta_factor", "sampler"?,
//    "basis_cap"?, "init_retries"?, "budget"?, "seed"?}
inline NamedAttackConfig attack_config_from_json(const json& j) {
  try {
    if (j.is_string()) {
      const auto label = j.get<std::string>();
      return {label, attack_config_from_label(label)};
    }
    if (!j.is_object()) throw InvalidArgument("attack config must be a string or an object");
    AttackConfig cfg;
    cfg.p_schedule = parse_p_schedule(j.value("p_schedule", std::string("const")));
    cfg.delta_kind = parse_delta_kind(j.value("delta_schedule", std::string("log")));
    cfg.delta_factor = j.value("delta_factor", 0.05);
    if (j.contains("sampler")) cfg.sampler = sampler_from_json(j["sampler"]);
    if (j.contains("basis_cap")) cfg.basis_cap = j["basis_cap"].get<std::size_t>();
    if (j.contains("init_retries")) cfg.init_retries = j["init_retries"].get<std::size_t>();
    if (j.contains("budget")) cfg.budget = j["budget"].get<std::uint64_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    const std::string label = j.value("label", attack_config_label(cfg));
    return {label, cfg};
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("attack config: ") + e.what());
  }
}

inline TrainHyper train_hyper_from_json(const json& j) {
  TrainHyper h;
  if (j.is_null()) return h;
  if (!j.is_object()) throw InvalidArgument("hyper: expected an object");
  try {
    if (j.contains("n_estimators")) h.n_estimators = j["n_estimators"].get<int>();
    if (j.contains("max_depth")) h.max_depth = j["max_depth"].get<int>();
    if (j.contains("learning_rate")) h.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("C")) h.C = j["C"].get<double>();
    if (j.contains("alpha")) h.alpha = j["alpha"].get<double>();
    if (j.contains("max_features")) h.max_features = j["max_features"].get<std::size_t>();
    if (j.contains("max_iter")) h.max_iter = j["max_iter"].get<int>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("hyper: ") + e.what());
  }
  return h;
}

}  // namespace deltabound
