#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hgame/types.hpp"

namespace hgame {

// Where a speed bound or target is measured from.
enum class SpeedBase { kAbsolute, kCurrent };

struct ManeuverDef {
  std::string id;
  SpeedBase target_base = SpeedBase::kAbsolute;
  double target = 0.0;
  SpeedBase envelope_base = SpeedBase::kAbsolute;
  std::optional<double> lo;  // nullopt: unbounded before clipping
  std::optional<double> hi;

  friend bool operator==(const ManeuverDef&, const ManeuverDef&) = default;
};

// A level-1 action resolved against a concrete agent state.
struct Maneuver {
  std::string id;
  double v_lo = 0.0;
  double v_hi = 0.0;
  double target_speed = 0.0;
};

struct RuleKey {
  Task task;
  Segment segment;
  Light light;

  auto operator<=>(const RuleKey&) const = default;
};

class ManeuverRuleTable {
 public:
  double speed_margin = 2.0;
  std::map<std::string, ManeuverDef> maneuvers;
  std::map<RuleKey, std::vector<std::string>> table;

  // Turns on APPROACH/TURN_EXEC may proceed or wait; through traffic tracks or decelerates on green
  // and only decelerates on amber/red. Turning vehicles on the exit behave like through traffic.
  static ManeuverRuleTable defaults() {
    ManeuverRuleTable rules;
    rules.add({"PROCEED_TURN", SpeedBase::kAbsolute, 6.0, SpeedBase::kAbsolute, 2.0, 9.0});
    rules.add({"WAIT", SpeedBase::kAbsolute, 0.0, SpeedBase::kAbsolute, 0.0, 1.0});
    rules.add({"TRACK_SPEED", SpeedBase::kCurrent, 0.0, SpeedBase::kCurrent, -2.0, 2.0});
    rules.add({"DECELERATE", SpeedBase::kAbsolute, 0.0, SpeedBase::kCurrent, std::nullopt, -2.0});
    for (Task task : {Task::kLeftTurn, Task::kRightTurn}) {
      for (Light light : kAllLights) {
        rules.table[{task, Segment::kApproach, light}] = {"PROCEED_TURN", "WAIT"};
        rules.table[{task, Segment::kTurnExec, light}] = {"PROCEED_TURN", "WAIT"};
        rules.table[{task, Segment::kExit, light}] = {"TRACK_SPEED", "DECELERATE"};
      }
    }
    for (Segment segment : kAllSegments) {
      rules.table[{Task::kThrough, segment, Light::kGreen}] = {"TRACK_SPEED", "DECELERATE"};
      rules.table[{Task::kThrough, segment, Light::kAmber}] = {"DECELERATE"};
      rules.table[{Task::kThrough, segment, Light::kRed}] = {"DECELERATE"};
    }
    return rules;
  }

  void add(ManeuverDef def) { maneuvers[def.id] = std::move(def); }

  const std::vector<std::string>& actions(Task task, Segment segment, Light light) const {
    const auto it = table.find({task, segment, light});
    if (it == table.end() || it->second.empty()) {
      throw Error(ErrorCode::kUnknownManeuver,
                  "rule table has no actions for (" + std::string(to_string(task)) + ", " +
                      std::string(to_string(segment)) + ", " + std::string(to_string(light)) + ")");
    }
    return it->second;
  }

  const std::vector<std::string>& actions(const AgentState& s) const {
    return actions(s.task, s.segment, s.light);
  }

  const ManeuverDef& definition(const std::string& id) const {
    const auto it = maneuvers.find(id);
    if (it == maneuvers.end()) throw Error(ErrorCode::kUnknownManeuver, "no envelope for maneuver '" + id + "'");
    return it->second;
  }

  Maneuver resolve(const std::string& id, const AgentState& state) const {
    const ManeuverDef& def = definition(id);
    const double cap = state.lane.speed_limit + speed_margin;
    const double base = def.envelope_base == SpeedBase::kCurrent ? state.speed : 0.0;
    const double lo_raw = def.lo ? base + *def.lo : -std::numeric_limits<double>::infinity();
    const double hi_raw = def.hi ? base + *def.hi : std::numeric_limits<double>::infinity();
    Maneuver m;
    m.id = id;
    m.v_lo = std::clamp(lo_raw, 0.0, cap);
    m.v_hi = std::clamp(hi_raw, m.v_lo, cap);
    const double target =
        def.target_base == SpeedBase::kCurrent ? state.speed + def.target : def.target;
    m.target_speed = std::clamp(target, m.v_lo, m.v_hi);
    return m;
  }

  void validate() const {
    for (Task t : kAllTasks) {
      for (Segment s : kAllSegments) {
        for (Light l : kAllLights) {
          for (const auto& id : actions(t, s, l)) definition(id);
        }
      }
    }
    for (const auto& [id, def] : maneuvers) {
      if (def.lo && def.hi && *def.lo > *def.hi) {
        throw Error(ErrorCode::kInvalidArgument, "maneuver '" + id + "' has lo > hi");
      }
    }
  }

  friend bool operator==(const ManeuverRuleTable&, const ManeuverRuleTable&) = default;
};

}  // namespace hgame
