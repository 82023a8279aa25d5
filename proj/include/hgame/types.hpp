#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "hgame/errors.hpp"

namespace hgame {

using AgentId = int;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
// Plain sqrt: coordinates are metres, far from overflow, and libm hypot is several times slower.
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

enum class Task { kLeftTurn, kRightTurn, kThrough };
enum class Segment { kApproach, kTurnExec, kExit };
enum class Light { kGreen, kAmber, kRed };

// Trajectory sampling schemes: S(1), S(1+B), S(1+G).
enum class Scheme { kS1, kBound, kGauss };

inline constexpr std::array<Task, 3> kAllTasks = {Task::kLeftTurn, Task::kRightTurn, Task::kThrough};
inline constexpr std::array<Segment, 3> kAllSegments = {Segment::kApproach, Segment::kTurnExec,
                                                        Segment::kExit};
inline constexpr std::array<Light, 3> kAllLights = {Light::kGreen, Light::kAmber, Light::kRed};
inline constexpr std::array<Scheme, 3> kAllSchemes = {Scheme::kS1, Scheme::kBound, Scheme::kGauss};

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::kLeftTurn: return "LEFT_TURN";
    case Task::kRightTurn: return "RIGHT_TURN";
    case Task::kThrough: return "THROUGH";
  }
  return "?";
}

inline std::string_view to_string(Segment s) {
  switch (s) {
    case Segment::kApproach: return "APPROACH";
    case Segment::kTurnExec: return "TURN_EXEC";
    case Segment::kExit: return "EXIT";
  }
  return "?";
}

inline std::string_view to_string(Light l) {
  switch (l) {
    case Light::kGreen: return "GREEN";
    case Light::kAmber: return "AMBER";
    case Light::kRed: return "RED";
  }
  return "?";
}

// Registry spelling (S1, S1B, S1G); trajectory CSV uses the scheme tag spelling instead.
inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::kS1: return "S1";
    case Scheme::kBound: return "S1B";
    case Scheme::kGauss: return "S1G";
  }
  return "?";
}

inline std::string_view scheme_tag(Scheme s) {
  switch (s) {
    case Scheme::kS1: return "S1";
    case Scheme::kBound: return "BOUND";
    case Scheme::kGauss: return "GAUSS";
  }
  return "?";
}

template <typename Enum, std::size_t N>
bool parse_enum(std::string_view text, const std::array<Enum, N>& values, Enum& out) {
  for (Enum v : values) {
    if (to_string(v) == text) {
      out = v;
      return true;
    }
  }
  return false;
}

inline Task parse_task(std::string_view s) {
  Task t{};
  if (!parse_enum(s, kAllTasks, t)) throw Error(ErrorCode::kInvalidArgument, "unknown task '" + std::string(s) + "'");
  return t;
}

inline Segment parse_segment(std::string_view s) {
  Segment v{};
  if (!parse_enum(s, kAllSegments, v)) throw Error(ErrorCode::kInvalidArgument, "unknown segment '" + std::string(s) + "'");
  return v;
}

inline Light parse_light(std::string_view s) {
  Light v{};
  if (!parse_enum(s, kAllLights, v)) throw Error(ErrorCode::kInvalidArgument, "unknown light '" + std::string(s) + "'");
  return v;
}

inline Scheme parse_scheme(std::string_view s) {
  Scheme v{};
  if (parse_enum(s, kAllSchemes, v)) return v;
  for (Scheme c : kAllSchemes) {
    if (scheme_tag(c) == s) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown sampling scheme '" + std::string(s) + "'");
}

struct LaneRef {
  std::string id;
  std::vector<Vec2> centerline;
  double half_width = 1.75;
  double speed_limit = 15.0;

  friend bool operator==(const LaneRef&, const LaneRef&) = default;
};

struct AgentState {
  AgentId id = 0;
  Vec2 position;
  double heading = 0.0;  // radians
  double speed = 0.0;
  double acceleration = 0.0;
  Task task = Task::kThrough;
  Segment segment = Segment::kApproach;
  Light light = Light::kGreen;
  LaneRef lane;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct PedestrianState {
  Vec2 position;
  bool has_right_of_way = false;
  bool on_conflicting_crosswalk = false;

  friend bool operator==(const PedestrianState&, const PedestrianState&) = default;
};

struct LatticeEndpoint {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;

  friend bool operator==(const LatticeEndpoint&, const LatticeEndpoint&) = default;
};

inline void validate(const LaneRef& lane) {
  if (lane.centerline.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "lane '" + lane.id + "' needs at least 2 waypoints");
  }
  for (std::size_t k = 1; k < lane.centerline.size(); ++k) {
    if (lane.centerline[k] == lane.centerline[k - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "lane '" + lane.id + "' has repeated waypoints");
    }
  }
  if (!(lane.half_width > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lane half_width must be > 0");
}

}  // namespace hgame
