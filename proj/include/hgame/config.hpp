#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "hgame/behavior_model.hpp"
#include "hgame/estimation.hpp"
#include "hgame/features.hpp"
#include "hgame/scenario_io.hpp"

namespace hgame {

struct GenerateConfig {
  std::size_t n_games = 500;
  std::string model = "PNE-QE:BR:S1B";
  std::vector<double> beta_true{20.0, 1.5, 0.05, 5.0, 3.0, -2.0, -4.0};
  double alpha_true = 0.5;
  std::uint64_t seed = 7;
  std::string scene_template{kFourWayTemplate};

  friend bool operator==(const GenerateConfig&, const GenerateConfig&) = default;
};

struct RunConfig {
  std::string input;
  std::string output_dir = "out";
  std::vector<std::string> models;  // empty: all registered models
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool strict_parse = true;
  FeatureSpec features = FeatureSpec::defaults();
  ModelSetup setup;
  EstimationOptions estimation;
  double split = 0.75;
  int runs = 30;
  GenerateConfig generate;

  std::vector<std::string> model_keys() const {
    if (!models.empty()) return models;
    std::vector<std::string> keys;
    for (const auto& m : model_registry()) keys.push_back(m.key());
    return keys;
  }

  SyntheticSpec synthetic_spec() const {
    SyntheticSpec spec;
    spec.n_games = generate.n_games;
    spec.model = parse_model(generate.model);
    spec.beta_true = generate.beta_true;
    spec.alpha_true = generate.alpha_true;
    spec.seed = generate.seed;
    spec.scene_template = generate.scene_template;
    spec.features = features;
    return spec;
  }

  void validate() const {
    features.validate();
    setup.utility.validate();
    setup.rules.validate();
    setup.kinematics.validate();
    if (!(split > 0.0 && split < 1.0)) throw Error(ErrorCode::kInvalidSplit, "evaluation.split must lie in (0, 1)");
    if (runs < 1) throw Error(ErrorCode::kInvalidArgument, "evaluation.runs must be positive");
    if (threads < 1) throw Error(ErrorCode::kInvalidArgument, "threads must be positive");
  }
};

// --- JSON ---------------------------------------------------------------------------------------

namespace config_detail {

inline std::string_view to_string(SpeedBase b) { return b == SpeedBase::kCurrent ? "current" : "absolute"; }

inline SpeedBase parse_base(const std::string& s) {
  if (s == "current") return SpeedBase::kCurrent;
  if (s == "absolute") return SpeedBase::kAbsolute;
  throw Error(ErrorCode::kInvalidArgument, "speed base must be 'absolute' or 'current', got '" + s + "'");
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!keys.contains(k)) throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + where + "." + k + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

}  // namespace config_detail

inline json to_json(const ManeuverRuleTable& rules) {
  json defs = json::array();
  for (const auto& [id, d] : rules.maneuvers) {
    defs.push_back({{"id", id},
                    {"target_base", config_detail::to_string(d.target_base)},
                    {"target", d.target},
                    {"envelope_base", config_detail::to_string(d.envelope_base)},
                    {"lo", d.lo ? json(*d.lo) : json(nullptr)},
                    {"hi", d.hi ? json(*d.hi) : json(nullptr)}});
  }
  json table = json::array();
  for (const auto& [key, actions] : rules.table) {
    table.push_back({{"task", to_string(key.task)},
                     {"segment", to_string(key.segment)},
                     {"light", to_string(key.light)},
                     {"actions", actions}});
  }
  return {{"speed_margin", rules.speed_margin}, {"maneuvers", defs}, {"table", table}};
}

inline ManeuverRuleTable rules_from_json(const json& j) {
  config_detail::reject_unknown(j, {"speed_margin", "maneuvers", "table"}, "rules");
  ManeuverRuleTable rules = ManeuverRuleTable::defaults();
  config_detail::read(j, "speed_margin", rules.speed_margin);
  if (j.contains("maneuvers")) {
    rules.maneuvers.clear();
    for (const json& d : j.at("maneuvers")) {
      config_detail::reject_unknown(d, {"id", "target_base", "target", "envelope_base", "lo", "hi"}, "rules.maneuvers");
      ManeuverDef def;
      def.id = d.at("id").get<std::string>();
      def.target_base = config_detail::parse_base(d.value("target_base", std::string("absolute")));
      def.target = d.value("target", 0.0);
      def.envelope_base = config_detail::parse_base(d.value("envelope_base", std::string("absolute")));
      if (d.contains("lo") && !d.at("lo").is_null()) def.lo = d.at("lo").get<double>();
      if (d.contains("hi") && !d.at("hi").is_null()) def.hi = d.at("hi").get<double>();
      rules.add(def);
    }
  }
  if (j.contains("table")) {
    rules.table.clear();
    for (const json& row : j.at("table")) {
      config_detail::reject_unknown(row, {"task", "segment", "light", "actions"}, "rules.table");
      const RuleKey key{parse_task(row.at("task").get<std::string>()), parse_segment(row.at("segment").get<std::string>()),
                        parse_light(row.at("light").get<std::string>())};
      rules.table[key] = row.at("actions").get<std::vector<std::string>>();
    }
  }
  return rules;
}

inline json to_json(const UtilityParams& p) {
  json gaps = json::array();
  for (const auto& [key, gap] : p.safe_gap) {
    gaps.push_back({{"ego", to_string(key.first)}, {"other", to_string(key.second)}, {"gap", gap}});
  }
  return {{"weights", p.weights},
          {"goal_distance", p.goal_distance},
          {"sigma", p.sigma},
          {"safe_gap", gaps},
          {"safe_gap_same_lane", p.safe_gap_same_lane},
          {"stop_threshold", p.stop_threshold},
          {"pedestrian_vicinity", p.pedestrian_vicinity}};
}

inline UtilityParams utility_from_json(const json& j) {
  config_detail::reject_unknown(
      j, {"weights", "goal_distance", "sigma", "safe_gap", "safe_gap_same_lane", "stop_threshold", "pedestrian_vicinity"},
      "utility");
  UtilityParams p = UtilityParams::defaults();
  config_detail::read(j, "weights", p.weights);
  config_detail::read(j, "goal_distance", p.goal_distance);
  config_detail::read(j, "sigma", p.sigma);
  config_detail::read(j, "safe_gap_same_lane", p.safe_gap_same_lane);
  config_detail::read(j, "stop_threshold", p.stop_threshold);
  config_detail::read(j, "pedestrian_vicinity", p.pedestrian_vicinity);
  if (j.contains("safe_gap")) {
    for (const json& row : j.at("safe_gap")) {
      config_detail::reject_unknown(row, {"ego", "other", "gap"}, "utility.safe_gap");
      p.safe_gap[{parse_task(row.at("ego").get<std::string>()), parse_task(row.at("other").get<std::string>())}] =
          row.at("gap").get<double>();
    }
  }
  return p;
}

inline json to_json(const Kinematics& k) {
  return {{"a_min", k.a_min},         {"a_max", k.a_max},
          {"j_max", k.j_max},         {"comfort_accel", k.comfort_accel},
          {"comfort_decel", k.comfort_decel}, {"horizon", k.horizon},
          {"dt", k.dt},               {"n_gauss", k.n_gauss}};
}

inline Kinematics kinematics_from_json(const json& j) {
  config_detail::reject_unknown(j, {"a_min", "a_max", "j_max", "comfort_accel", "comfort_decel", "horizon", "dt", "n_gauss"},
                                "kinematics");
  Kinematics k;
  config_detail::read(j, "a_min", k.a_min);
  config_detail::read(j, "a_max", k.a_max);
  config_detail::read(j, "j_max", k.j_max);
  config_detail::read(j, "comfort_accel", k.comfort_accel);
  config_detail::read(j, "comfort_decel", k.comfort_decel);
  config_detail::read(j, "horizon", k.horizon);
  config_detail::read(j, "dt", k.dt);
  config_detail::read(j, "n_gauss", k.n_gauss);
  return k;
}

inline json to_json(const RunConfig& c) {
  const auto& e = c.estimation;
  return {{"input", c.input},
          {"output_dir", c.output_dir},
          {"models", c.models},
          {"seed", c.seed},
          {"threads", c.threads},
          {"strict_parse", c.strict_parse},
          {"features", c.features.columns},
          {"value_propagation", to_string(c.setup.propagation)},
          {"utility", to_json(c.setup.utility)},
          {"kinematics", to_json(c.setup.kinematics)},
          {"rules", to_json(c.setup.rules)},
          {"estimation",
           {{"likelihood", to_string(e.likelihood)},
            {"epsilon_min", e.glm.epsilon_min},
            {"eta_min", e.glm.eta_min},
            {"glm_tolerance", e.glm.tolerance},
            {"glm_max_iterations", e.glm.max_iterations},
            {"lambda_start", e.choice.lambda_start},
            {"choice_tolerance", e.choice.tolerance},
            {"choice_max_iterations", e.choice.max_iterations}}},
          {"evaluation", {{"split", c.split}, {"runs", c.runs}}},
          {"generate",
           {{"n_games", c.generate.n_games},
            {"model", c.generate.model},
            {"beta_true", c.generate.beta_true},
            {"alpha_true", c.generate.alpha_true},
            {"seed", c.generate.seed},
            {"template", c.generate.scene_template}}}};
}

// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const json& j) {
  using config_detail::read;
  config_detail::reject_unknown(j,
                                {"input", "output_dir", "models", "seed", "threads", "strict_parse", "features",
                                 "value_propagation", "utility", "kinematics", "rules", "estimation", "evaluation",
                                 "generate"},
                                "config");
  RunConfig c;
  try {
    read(j, "input", c.input);
    read(j, "output_dir", c.output_dir);
    read(j, "models", c.models);
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    read(j, "strict_parse", c.strict_parse);
    read(j, "features", c.features.columns);
    if (j.contains("value_propagation")) {
      const auto v = j.at("value_propagation").get<std::string>();
      if (v == "belief") c.setup.propagation = ValuePropagation::kBelief;
      else if (v == "joint") c.setup.propagation = ValuePropagation::kJoint;
      else throw Error(ErrorCode::kInvalidArgument, "value_propagation must be 'belief' or 'joint'");
    }
    if (j.contains("utility")) c.setup.utility = utility_from_json(j.at("utility"));
    if (j.contains("kinematics")) c.setup.kinematics = kinematics_from_json(j.at("kinematics"));
    if (j.contains("rules")) c.setup.rules = rules_from_json(j.at("rules"));
    if (j.contains("estimation")) {
      const json& e = j.at("estimation");
      config_detail::reject_unknown(e,
                                    {"likelihood", "epsilon_min", "eta_min", "glm_tolerance", "glm_max_iterations",
                                     "lambda_start", "choice_tolerance", "choice_max_iterations"},
                                    "estimation");
      if (e.contains("likelihood")) c.estimation.likelihood = parse_likelihood(e.at("likelihood").get<std::string>());
      read(e, "epsilon_min", c.estimation.glm.epsilon_min);
      read(e, "eta_min", c.estimation.glm.eta_min);
      c.estimation.choice.eta_min = c.estimation.glm.eta_min;
      read(e, "glm_tolerance", c.estimation.glm.tolerance);
      read(e, "glm_max_iterations", c.estimation.glm.max_iterations);
      read(e, "lambda_start", c.estimation.choice.lambda_start);
      read(e, "choice_tolerance", c.estimation.choice.tolerance);
      read(e, "choice_max_iterations", c.estimation.choice.max_iterations);
    }
    if (j.contains("evaluation")) {
      const json& e = j.at("evaluation");
      config_detail::reject_unknown(e, {"split", "runs"}, "evaluation");
      read(e, "split", c.split);
      read(e, "runs", c.runs);
    }
    if (j.contains("generate")) {
      const json& g = j.at("generate");
      config_detail::reject_unknown(g, {"n_games", "model", "beta_true", "alpha_true", "seed", "template"}, "generate");
      read(g, "n_games", c.generate.n_games);
      read(g, "model", c.generate.model);
      read(g, "beta_true", c.generate.beta_true);
      read(g, "alpha_true", c.generate.alpha_true);
      read(g, "seed", c.generate.seed);
      read(g, "template", c.generate.scene_template);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, "config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace hgame
