#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hgame/behavior_model.hpp"
#include "hgame/estimation.hpp"
#include "hgame/features.hpp"
#include "hgame/game_core.hpp"
#include "hgame/geometry.hpp"

namespace hgame {

inline constexpr int kSchemaVersion = 1;

// One game instance: the agents in the game, pedestrians, and the observed play.
struct ScenarioRecord {
  std::string game_id;
  double timestamp = 0.0;
  std::string scene_id;
  std::vector<AgentState> agents;
  std::vector<PedestrianState> pedestrians;
  ObservedProfile observed;
  std::optional<Scheme> trajectory_scheme;  // lattice the observed trajectory indices refer to
  std::string map_ref;

  friend bool operator==(const ScenarioRecord&, const ScenarioRecord&) = default;
};

// --- JSON ---------------------------------------------------------------------------------------

using json = nlohmann::json;

inline json to_json(const AgentState& a) {
  json pts = json::array();
  for (const Vec2& p : a.lane.centerline) pts.push_back({p.x, p.y});
  return {{"id", a.id},
          {"x", a.position.x},
          {"y", a.position.y},
          {"heading", a.heading},
          {"speed", a.speed},
          {"acceleration", a.acceleration},
          {"task", to_string(a.task)},
          {"segment", to_string(a.segment)},
          {"light", to_string(a.light)},
          {"lane",
           {{"id", a.lane.id}, {"centerline", pts}, {"half_width", a.lane.half_width},
            {"speed_limit", a.lane.speed_limit}}}};
}

inline json to_json(const ScenarioRecord& r) {
  json agents = json::array();
  for (const auto& a : r.agents) agents.push_back(to_json(a));
  json peds = json::array();
  for (const auto& p : r.pedestrians) {
    peds.push_back({{"x", p.position.x},
                    {"y", p.position.y},
                    {"has_right_of_way", p.has_right_of_way},
                    {"on_conflicting_crosswalk", p.on_conflicting_crosswalk}});
  }
  json observed = json::object();
  for (const auto& [id, o] : r.observed) {
    observed[std::to_string(id)] = {{"maneuver", o.maneuver}, {"trajectory", o.trajectory}};
  }
  json j = {{"schema_version", kSchemaVersion},
            {"game_id", r.game_id},
            {"timestamp", r.timestamp},
            {"scene_id", r.scene_id},
            {"agents", agents},
            {"pedestrians", peds},
            {"observed", observed},
            {"map_ref", r.map_ref}};
  if (r.trajectory_scheme) j["trajectory_scheme"] = to_string(*r.trajectory_scheme);
  return j;
}

inline std::string to_jsonl_line(const ScenarioRecord& r) { return to_json(r).dump(); }

namespace detail {

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw Error(ErrorCode::kSchemaViolation, path + " is not an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::kSchemaViolation, "missing field " + path + (path.empty() ? "" : ".") + key);
  return *it;
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number()) throw Error(ErrorCode::kSchemaViolation, join(path, key) + " must be a number");
  return v.get<double>();
}

inline std::string text(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) throw Error(ErrorCode::kSchemaViolation, join(path, key) + " must be a string");
  return v.get<std::string>();
}

inline bool flag(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_boolean()) throw Error(ErrorCode::kSchemaViolation, join(path, key) + " must be a boolean");
  return v.get<bool>();
}

template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchemaViolation) throw;
    throw Error(ErrorCode::kSchemaViolation, path + ": " + e.message());
  }
}

inline AgentState agent_from_json(const json& j, const std::string& path) {
  AgentState a;
  const json& id = field(j, "id", path);
  if (!id.is_number_integer()) throw Error(ErrorCode::kSchemaViolation, join(path, "id") + " must be an integer");
  a.id = id.get<AgentId>();
  a.position = {number(j, "x", path), number(j, "y", path)};
  a.heading = number(j, "heading", path);
  a.speed = number(j, "speed", path);
  if (a.speed < 0.0) throw Error(ErrorCode::kSchemaViolation, join(path, "speed") + " must be nonnegative");
  a.acceleration = number(j, "acceleration", path);
  a.task = with_path(join(path, "task"), [&] { return parse_task(text(j, "task", path)); });
  a.segment = with_path(join(path, "segment"), [&] { return parse_segment(text(j, "segment", path)); });
  a.light = with_path(join(path, "light"), [&] { return parse_light(text(j, "light", path)); });
  const std::string lp = join(path, "lane");
  const json& lane = field(j, "lane", path);
  a.lane.id = text(lane, "id", lp);
  const json& pts = field(lane, "centerline", lp);
  if (!pts.is_array()) throw Error(ErrorCode::kSchemaViolation, lp + ".centerline must be an array");
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const json& p = pts[k];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(ErrorCode::kSchemaViolation, lp + ".centerline[" + std::to_string(k) + "] must be [x, y]");
    }
    a.lane.centerline.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  a.lane.half_width = number(lane, "half_width", lp);
  a.lane.speed_limit = number(lane, "speed_limit", lp);
  if (!(a.lane.half_width > 0.0)) throw Error(ErrorCode::kSchemaViolation, lp + ".half_width must be positive");
  with_path(lp, [&] {
    validate(a.lane);
    return 0;
  });
  return a;
}

}  // namespace detail

// Parses one JSONL line. Throws ParseError for malformed JSON and SchemaViolation (with the field
// path) for structurally invalid records.
inline ScenarioRecord parse_scenario_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  using detail::field;
  ScenarioRecord r;
  const json& version = field(j, "schema_version", "");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw Error(ErrorCode::kSchemaViolation, "schema_version must be " + std::to_string(kSchemaVersion));
  }
  r.game_id = detail::text(j, "game_id", "");
  r.timestamp = detail::number(j, "timestamp", "");
  r.scene_id = detail::text(j, "scene_id", "");
  r.map_ref = detail::text(j, "map_ref", "");
  const json& agents = field(j, "agents", "");
  if (!agents.is_array() || agents.empty()) throw Error(ErrorCode::kSchemaViolation, "agents must be a nonempty array");
  for (std::size_t k = 0; k < agents.size(); ++k) {
    r.agents.push_back(detail::agent_from_json(agents[k], "agents[" + std::to_string(k) + "]"));
  }
  for (std::size_t a = 0; a < r.agents.size(); ++a) {
    for (std::size_t b = a + 1; b < r.agents.size(); ++b) {
      if (r.agents[a].id == r.agents[b].id) throw Error(ErrorCode::kSchemaViolation, "agents: duplicate id");
    }
  }
  const json& peds = field(j, "pedestrians", "");
  if (!peds.is_array()) throw Error(ErrorCode::kSchemaViolation, "pedestrians must be an array");
  for (std::size_t k = 0; k < peds.size(); ++k) {
    const std::string path = "pedestrians[" + std::to_string(k) + "]";
    PedestrianState p;
    p.position = {detail::number(peds[k], "x", path), detail::number(peds[k], "y", path)};
    p.has_right_of_way = detail::flag(peds[k], "has_right_of_way", path);
    p.on_conflicting_crosswalk = detail::flag(peds[k], "on_conflicting_crosswalk", path);
    r.pedestrians.push_back(p);
  }
  const json& observed = field(j, "observed", "");
  if (!observed.is_object()) throw Error(ErrorCode::kSchemaViolation, "observed must be an object");
  for (const auto& [key, value] : observed.items()) {
    const std::string path = "observed." + key;
    AgentId id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kSchemaViolation, path + ": key must be an agent id");
    }
    if (std::none_of(r.agents.begin(), r.agents.end(), [&](const AgentState& a) { return a.id == id; })) {
      throw Error(ErrorCode::kSchemaViolation, path + ": no such agent");
    }
    ObservedAction o;
    o.maneuver = detail::text(value, "maneuver", path);
    const json& t = detail::field(value, "trajectory", path);
    if (!t.is_number_unsigned()) {
      throw Error(ErrorCode::kSchemaViolation, path + ".trajectory must be a nonnegative integer");
    }
    o.trajectory = t.get<std::size_t>();
    r.observed[id] = o;
  }
  if (const auto it = j.find("trajectory_scheme"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::kSchemaViolation, "trajectory_scheme must be a string");
    r.trajectory_scheme =
        detail::with_path("trajectory_scheme", [&] { return parse_scheme(it->get<std::string>()); });
  }
  return r;
}

struct ParseIssue {
  std::size_t line = 0;  // 1-based
  ErrorCode code = ErrorCode::kParseError;
  std::string message;
};

struct ParseResult {
  std::vector<ScenarioRecord> records;
  std::vector<ParseIssue> issues;
};

// Strict mode throws on the first bad line (message carries the line number); lenient mode skips
// bad lines and reports them. Blank lines are ignored.
inline ParseResult parse_scenarios(std::istream& in, bool strict = true) {
  ParseResult out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(parse_scenario_line(line));
    } catch (const Error& e) {
      if (strict) throw Error(e.code(), "line " + std::to_string(number) + ": " + e.message());
      out.issues.push_back({number, e.code(), e.message()});
    }
  }
  return out;
}

inline ParseResult parse_scenarios(const std::filesystem::path& path, bool strict = true) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_scenarios(in, strict);
}

inline void write_scenarios(std::ostream& out, std::span<const ScenarioRecord> records) {
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

// Observed maneuvers must come from the rule table for the agent's situation.
inline void validate_record(const ScenarioRecord& r, const ManeuverRuleTable& rules) {
  for (const auto& [id, o] : r.observed) {
    const auto it = std::find_if(r.agents.begin(), r.agents.end(), [&](const AgentState& a) { return a.id == id; });
    const auto& allowed = rules.actions(*it);
    if (std::find(allowed.begin(), allowed.end(), o.maneuver) == allowed.end()) {
      throw Error(ErrorCode::kSchemaViolation, "observed." + std::to_string(id) + ".maneuver '" + o.maneuver +
                                                   "' is not available in this situation");
    }
  }
}

// Scenes whose consecutive records are not 1 s apart (tolerance 1e-3).
inline std::vector<std::string> cadence_violations(std::span<const ScenarioRecord> records, double step = 1.0,
                                                   double tol = 1e-3) {
  std::map<std::string, std::vector<double>> scenes;
  for (const auto& r : records) scenes[r.scene_id].push_back(r.timestamp);
  std::vector<std::string> bad;
  for (auto& [scene, times] : scenes) {
    std::sort(times.begin(), times.end());
    for (std::size_t k = 1; k < times.size(); ++k) {
      if (std::abs(times[k] - times[k - 1] - step) > tol) {
        bad.push_back(scene);
        break;
      }
    }
  }
  return bad;
}

// --- conflict filter ----------------------------------------------------------------------------

// Lane path an agent covers within the horizon under its farthest-reaching normative (S1) maneuver.
inline Polyline normative_path(const AgentState& a, const ManeuverRuleTable& rules, const Kinematics& kin) {
  const Polyline lane(a.lane.centerline);
  const double s0 = lane.project(a.position);
  double reach = 0.0;
  for (const auto& id : rules.actions(a)) {
    const Maneuver m = rules.resolve(id, a);
    const double accel = m.target_speed >= a.speed ? kin.comfort_accel : -kin.comfort_decel;
    reach = std::max(reach, detail::normative_reach(a.speed, m.target_speed, accel, kin.j_max, kin.horizon).distance);
  }
  return lane.slice(s0, s0 + reach);
}

// Ego first, then every agent whose normative path crosses the ego's within the horizon, plus the
// immediate in-lane leader of each such agent; others ordered by id.
inline std::vector<AgentState> conflict_filter(std::span<const AgentState> scene, AgentId ego,
                                               const ManeuverRuleTable& rules, const Kinematics& kin) {
  const auto ego_it = std::find_if(scene.begin(), scene.end(), [&](const AgentState& a) { return a.id == ego; });
  if (ego_it == scene.end()) throw Error(ErrorCode::kInvalidArgument, "ego not in scene");
  const Polyline ego_path = normative_path(*ego_it, rules, kin);

  auto lane_position = [](const AgentState& a) { return Polyline(a.lane.centerline).project(a.position); };
  std::vector<AgentId> keep;
  for (const AgentState& a : scene) {
    if (a.id == ego) continue;
    const Polyline path = normative_path(a, rules, kin);
    const bool conflict = !ego_path.empty() && !path.empty() && ego_path.first_intersection(path).has_value();
    if (!conflict) continue;
    keep.push_back(a.id);
    const double s = lane_position(a);
    const AgentState* leader = nullptr;
    double best = 0.0;
    for (const AgentState& b : scene) {
      if (b.id == a.id || b.id == ego || b.lane.id != a.lane.id) continue;
      const double gap = lane_position(b) - s;
      if (gap > 0.0 && (!leader || gap < best)) {
        leader = &b;
        best = gap;
      }
    }
    if (leader) keep.push_back(leader->id);
  }
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  std::vector<AgentState> out{*ego_it};
  for (AgentId id : keep) {
    out.push_back(*std::find_if(scene.begin(), scene.end(), [&](const AgentState& a) { return a.id == id; }));
  }
  return out;
}

// --- scene template -----------------------------------------------------------------------------

// Four-way signalized intersection with right-hand traffic, 3.5 m lanes and the junction box
// spanning |x|, |y| < 8. Lanes: a northbound left turn, an eastbound right turn, and southbound
// through traffic.
namespace four_way {

inline constexpr double kBox = 8.0;
inline constexpr double kHalfLane = 1.75;

inline std::vector<Vec2> arc(Vec2 c, double r, double a0, double a1, int n = 16) {
  std::vector<Vec2> out;
  for (int k = 0; k <= n; ++k) {
    const double a = a0 + (a1 - a0) * k / n;
    out.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return out;
}

inline LaneRef left_turn_lane() {
  LaneRef l{"NB_LEFT", {{kHalfLane, -120.0}}, kHalfLane, 15.0};
  for (const Vec2& p : arc({-kBox, -kBox}, kBox + kHalfLane, 0.0, M_PI / 2)) l.centerline.push_back(p);
  l.centerline.push_back({-120.0, kHalfLane});
  return l;
}

inline LaneRef right_turn_lane() {
  LaneRef l{"EB_RIGHT", {{-120.0, -kHalfLane}}, kHalfLane, 15.0};
  for (const Vec2& p : arc({-kBox, -kBox}, kBox - kHalfLane, M_PI / 2, 0.0)) l.centerline.push_back(p);
  l.centerline.push_back({-kHalfLane, -120.0});
  return l;
}

inline LaneRef through_lane() { return {"SB_THROUGH", {{-kHalfLane, 120.0}, {-kHalfLane, -120.0}}, kHalfLane, 15.0}; }

inline double heading_at(const Polyline& lane, double s) {
  const Vec2 t = lane.tangent_at(s);
  return std::atan2(t.y, t.x);
}

// Arc lengths where the lane enters and leaves the junction box.
inline std::pair<double, double> box_span(const Polyline& lane) {
  double enter = -1.0, leave = -1.0;
  const double len = lane.length();
  for (double s = 0.0; s <= len; s += 0.25) {
    const Vec2 p = lane.point_at(s);
    const bool inside = std::abs(p.x) < kBox && std::abs(p.y) < kBox;
    if (inside && enter < 0.0) enter = s;
    if (inside) leave = s;
  }
  return {enter, leave};
}

// box_span of a template lane, computed once per lane.
inline std::pair<double, double> template_span(const LaneRef& lane) {
  static const std::map<std::string, std::pair<double, double>> spans = [] {
    std::map<std::string, std::pair<double, double>> m;
    for (const LaneRef& l : {left_turn_lane(), right_turn_lane(), through_lane()}) m[l.id] = box_span(Polyline(l.centerline));
    return m;
  }();
  const auto it = spans.find(lane.id);
  return it != spans.end() ? it->second : box_span(Polyline(lane.centerline));
}

}  // namespace four_way

struct SyntheticScene {
  std::string game_id;
  std::vector<AgentState> agents;  // after the conflict filter, ego first
  std::vector<PedestrianState> pedestrians;
};

inline constexpr std::string_view kFourWayTemplate = "four_way";

// Samples one scene from the four-way template and applies the conflict filter. The ego
// alternates between the left and the right turner with the game index.
inline SyntheticScene sample_scene(std::string_view template_id, std::uint64_t seed, std::size_t index,
                                   std::uint64_t attempt, const ManeuverRuleTable& rules, const Kinematics& kin) {
  if (template_id != kFourWayTemplate) {
    throw Error(ErrorCode::kInvalidArgument, "unknown scene template '" + std::string(template_id) + "'");
  }
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(index), attempt}));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  const double phase = u01(rng);
  const Light ns = phase < 0.6 ? Light::kGreen : (phase < 0.75 ? Light::kAmber : Light::kRed);
  const Light ew = ns == Light::kRed ? Light::kGreen : Light::kRed;

  std::vector<AgentState> scene;
  auto place = [&](AgentId id, const LaneRef& lane, Task task, Light light, double s, double speed) {
    const Polyline line(lane.centerline);
    const auto [enter, leave] = four_way::template_span(lane);
    AgentState a;
    a.id = id;
    a.lane = lane;
    a.position = line.point_at(s);
    a.heading = four_way::heading_at(line, s);
    a.speed = speed;
    a.acceleration = std::clamp(uniform(-1.0, 1.0), -kin.a_max, kin.a_max);
    a.task = task;
    a.segment = s < enter ? Segment::kApproach : (s <= leave ? Segment::kTurnExec : Segment::kExit);
    a.light = light;
    scene.push_back(a);
  };
  auto place_turner = [&](AgentId id, const LaneRef& lane, Task task, Light light) {
    const auto [enter, leave] = four_way::template_span(lane);
    const double which = u01(rng);
    if (which < 0.6) {
      place(id, lane, task, light, enter - uniform(1.0, 20.0), uniform(2.0, 12.0));
    } else if (which < 0.85) {
      place(id, lane, task, light, uniform(enter, leave), uniform(3.0, 8.0));
    } else {
      place(id, lane, task, light, leave + uniform(1.0, 20.0), uniform(4.0, 12.0));
    }
  };

  const bool ego_left = index % 2 == 0;
  const AgentId ego = ego_left ? 1 : 2;
  if (ego_left || u01(rng) < 0.5) place_turner(1, four_way::left_turn_lane(), Task::kLeftTurn, ns);
  if (!ego_left || u01(rng) < 0.5) place_turner(2, four_way::right_turn_lane(), Task::kRightTurn, ew);
  if (u01(rng) < 0.95) {
    const LaneRef lane = four_way::through_lane();
    const double enter = four_way::template_span(lane).first;
    const double s = enter - uniform(0.0, 30.0);
    place(3, lane, Task::kThrough, ns, s, uniform(5.0, 14.0));
    if (u01(rng) < 0.4) place(4, lane, Task::kThrough, ns, s + uniform(8.0, 30.0), uniform(4.0, 14.0));
  }

  SyntheticScene out;
  char id[32];
  std::snprintf(id, sizeof id, "g%07zu", index);
  out.game_id = id;
  out.agents = conflict_filter(scene, ego, rules, kin);
  if (u01(rng) < 0.3) {
    PedestrianState p;
    p.position = {-(four_way::kBox + 3.0), uniform(-6.0, 6.0)};
    p.has_right_of_way = u01(rng) < 0.7;
    p.on_conflicting_crosswalk = p.has_right_of_way && std::abs(p.position.y) < 2.0 * four_way::kHalfLane;
    out.pedestrians.push_back(p);
  }
  return out;
}

// --- synthetic generation -----------------------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_games = 100;
  BehaviorModel model;
  std::vector<double> beta_true{20.0, 1.5};
  double alpha_true = 0.5;
  std::uint64_t seed = 1;
  std::string scene_template{kFourWayTemplate};
  FeatureSpec features{{"intercept", "speed"}};
};

struct ModelSetup {
  UtilityParams utility = UtilityParams::defaults();
  ManeuverRuleTable rules = ManeuverRuleTable::defaults();
  Kinematics kinematics;
  ValuePropagation propagation = ValuePropagation::kBelief;
};

inline double dot_features(std::span<const double> beta, std::span<const double> x) {
  if (beta.size() != x.size()) throw Error(ErrorCode::kInvalidArgument, "beta and feature lengths differ");
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += beta[k] * x[k];
  return s;
}

inline std::uint64_t game_lattice_seed(const std::string& game_id) { return hash_string(game_id); }

inline HierarchicalGame build_record_game(const std::vector<AgentState>& agents, std::span<const PedestrianState> peds,
                                          const std::string& game_id, Scheme scheme, const ModelSetup& setup) {
  return build_game(agents, peds, scheme, setup.utility, setup.rules, setup.kinematics, game_lattice_seed(game_id));
}

inline std::size_t draw_index(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  return probs.size() - 1;
}

// Level-1 choice distribution of agent i under the model, given its regrets.
inline std::vector<double> level1_probabilities(const Level1Regrets& r, const BehaviorModel& model, double lambda,
                                                double alpha) {
  const MixedResponse primary = logit_from_regrets(r.primary, lambda);
  if (model.metamodel != Metamodel::kQL1) return primary.probs;
  return mix(alpha, logit_from_regrets(r.level0, lambda), primary).probs;
}

// Draws every agent's maneuver from the model's level-1 response and its trajectory from the
// level-2 concept's noisy response on the drawn branch.
inline ObservedProfile draw_observations(const HierarchicalGame& game, const HierarchicalSolution& sol,
                                         const BehaviorModel& model, std::span<const double> lambdas, double alpha,
                                         Rng& rng) {
  const std::vector<Level1Regrets> regrets = model_level1_regrets(sol, model);
  const std::size_t n = game.num_agents();
  Profile maneuvers(n);
  for (std::size_t i = 0; i < n; ++i) {
    maneuvers[i] = draw_index(level1_probabilities(regrets[i], model, lambdas[i], alpha), rng);
  }
  const LevelGame& g2 = game.level2[game.level1.index(maneuvers)];
  const ResponseKind kind = model.level2_concept().kind;
  ObservedProfile out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto values = kind == ResponseKind::kMM ? pessimistic_values(g2, i) : optimistic_values(g2, i);
    const std::size_t t = draw_index(logit_response(values, lambdas[i]).probs, rng);
    out[game.ids[i]] = {game.maneuvers[i][maneuvers[i]], t};
  }
  return out;
}

inline HierarchicalSolution solve_model(const HierarchicalGame& game, const BehaviorModel& model,
                                        ValuePropagation propagation = ValuePropagation::kBelief) {
  return backward_induction(game, model.level2_concept(), model.level1_concept(), propagation);
}

inline bool has_pure_equilibria(const HierarchicalSolution& sol) {
  return std::all_of(sol.level1.begin(), sol.level1.end(), [](const LevelOutcome& o) { return !o.supports.empty(); });
}

struct SyntheticDataset {
  std::vector<ScenarioRecord> records;
  std::size_t regenerated = 0;  // draws replaced because the maneuver game had no pure equilibrium
  std::size_t infeasible = 0;   // draws replaced because some agent had no feasible maneuver
  std::size_t decisions = 0;    // observed level-1 decisions with more than one maneuver
};

inline constexpr std::uint64_t kMaxRegenerations = 1000;

inline void validate(const SyntheticSpec& spec) {
  spec.features.validate();
  if (spec.beta_true.size() != spec.features.size()) {
    throw Error(ErrorCode::kInvalidArgument, "beta_true needs one coefficient per feature column");
  }
  if (spec.alpha_true < 0.0 || spec.alpha_true > 1.0) throw Error(ErrorCode::kInvalidArgument, "alpha_true in [0, 1]");
  if (spec.n_games == 0) throw Error(ErrorCode::kInvalidArgument, "n_games must be positive");
}

// Samples scenes, builds the game under the generating model's scheme and draws the observed
// play with lambda = beta_true . X per agent. PNE-QE draws without a pure equilibrium are redrawn.
inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec, const ModelSetup& setup = {}) {
  validate(spec);
  SyntheticDataset out;
  out.records.reserve(spec.n_games);
  for (std::size_t k = 0; k < spec.n_games; ++k) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= kMaxRegenerations) {
        throw Error(ErrorCode::kTemplateUnsatisfiable, "no usable scene after 1000 draws");
      }
      SyntheticScene scene = sample_scene(spec.scene_template, spec.seed, k, attempt, setup.rules, setup.kinematics);
      // A template can place a vehicle that cannot stop before a red line; nobody could be
      // observed in that state, so it is redrawn like a PNE-less draw.
      std::optional<HierarchicalGame> built;
      try {
        built = build_record_game(scene.agents, scene.pedestrians, scene.game_id, spec.model.scheme, setup);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEmptyActionSet) throw;
        ++out.infeasible;
        continue;
      }
      const HierarchicalGame& game = *built;
      const HierarchicalSolution sol = solve_model(game, spec.model, setup.propagation);
      if (spec.model.metamodel == Metamodel::kPNEQE && !has_pure_equilibria(sol)) {
        ++out.regenerated;
        continue;
      }
      const auto rows = game_features(spec.features, scene.agents);
      std::vector<double> lambdas;
      for (const auto& x : rows) {
        lambdas.push_back(dot_features(spec.beta_true, x));
        if (!(lambdas.back() > 0.0)) {
          throw Error(ErrorCode::kTemplateUnsatisfiable, "beta_true . X <= 0 in game " + scene.game_id);
        }
      }
      Rng rng(derive_seed(spec.seed, {0x0b5e55ull, static_cast<std::uint64_t>(k)}));
      ScenarioRecord r;
      r.game_id = scene.game_id;
      r.scene_id = scene.game_id;
      r.timestamp = 0.0;
      r.map_ref = spec.scene_template;
      r.observed = draw_observations(game, sol, spec.model, lambdas, spec.alpha_true, rng);
      r.trajectory_scheme = spec.model.scheme;
      for (std::size_t i = 0; i < game.num_agents(); ++i) {
        if (game.num_maneuvers(i) > 1) ++out.decisions;
      }
      r.agents = std::move(scene.agents);
      r.pedestrians = std::move(scene.pedestrians);
      out.records.push_back(std::move(r));
      break;
    }
  }
  return out;
}

}  // namespace hgame
