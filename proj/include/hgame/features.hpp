#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "hgame/geometry.hpp"
#include "hgame/types.hpp"

namespace hgame {

inline constexpr double kConflictDistanceCap = 100.0;

// Columns of the precision design matrix. Segment and light use treatment coding against
// APPROACH and GREEN so the intercept stays identifiable.
struct FeatureSpec {
  std::vector<std::string> columns;

  static FeatureSpec defaults() {
    return {{"intercept", "speed", "distance_to_conflict", "segment_TURN_EXEC", "segment_EXIT", "light_AMBER",
             "light_RED"}};
  }

  static const std::vector<std::string>& known_columns() {
    static const std::vector<std::string> cols = {
        "intercept",          "speed",        "acceleration", "distance_to_conflict",
        "segment_APPROACH",   "segment_TURN_EXEC", "segment_EXIT", "light_GREEN",
        "light_AMBER",        "light_RED"};
    return cols;
  }

  std::size_t size() const { return columns.size(); }

  void validate() const {
    if (columns.empty()) throw Error(ErrorCode::kInvalidArgument, "feature list is empty");
    for (const auto& c : columns) {
      const auto& known = known_columns();
      if (std::find(known.begin(), known.end(), c) == known.end()) {
        throw Error(ErrorCode::kInvalidArgument, "unknown feature column '" + c + "'");
      }
      if (std::count(columns.begin(), columns.end(), c) > 1) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate feature column '" + c + "'");
      }
    }
  }

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

// Arc distance along the ego lane, from the ego's current position, to the first crossing with
// another agent's lane (same-lane agents ignored). Capped when there is no crossing ahead.
inline double distance_to_conflict(const AgentState& ego, std::span<const AgentState> others,
                                   double cap = kConflictDistanceCap) {
  const Polyline lane(ego.lane.centerline);
  const double s0 = lane.project(ego.position);
  const Polyline ahead = lane.slice(s0, lane.length());
  if (ahead.empty()) return cap;
  double best = cap;
  for (const AgentState& o : others) {
    if (o.id == ego.id || o.lane.id == ego.lane.id) continue;
    const auto s = ahead.first_intersection(Polyline(o.lane.centerline));
    if (s) best = std::min(best, *s);
  }
  return best;
}

inline std::vector<double> feature_vector(const FeatureSpec& spec, const AgentState& s, double conflict_distance) {
  std::vector<double> x;
  x.reserve(spec.size());
  for (const std::string& c : spec.columns) {
    if (c == "intercept") x.push_back(1.0);
    else if (c == "speed") x.push_back(s.speed);
    else if (c == "acceleration") x.push_back(s.acceleration);
    else if (c == "distance_to_conflict") x.push_back(conflict_distance);
    else if (c.starts_with("segment_")) x.push_back(to_string(s.segment) == c.substr(8) ? 1.0 : 0.0);
    else if (c.starts_with("light_")) x.push_back(to_string(s.light) == c.substr(6) ? 1.0 : 0.0);
    else throw Error(ErrorCode::kInvalidArgument, "unknown feature column '" + c + "'");
  }
  return x;
}

// Feature rows for every agent of a game, in agent order.
inline std::vector<std::vector<double>> game_features(const FeatureSpec& spec, std::span<const AgentState> agents) {
  std::vector<std::vector<double>> rows;
  rows.reserve(agents.size());
  for (const AgentState& a : agents) rows.push_back(feature_vector(spec, a, distance_to_conflict(a, agents)));
  return rows;
}

}  // namespace hgame
