#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hgame/geometry.hpp"
#include "hgame/maneuvers.hpp"
#include "hgame/rng.hpp"
#include "hgame/types.hpp"

namespace hgame {

// Passenger-vehicle limits plus the normative (comfortable) rates used for S(1) placement.
struct Kinematics {
  double a_min = -4.0;  // m/s^2
  double a_max = 3.0;   // m/s^2
  double j_max = 2.0;   // m/s^3
  double comfort_accel = 1.0;
  double comfort_decel = -1.5;
  double horizon = 5.0;  // action plan horizon (s)
  double dt = 0.1;       // trajectory resampling step (s)
  std::size_t n_gauss = 4;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

  void validate() const {
    if (!(a_min < 0.0 && a_max > 0.0 && j_max > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "kinematic limits need a_min < 0 < a_max and j_max > 0");
    }
    if (!(comfort_accel > 0.0 && comfort_accel <= a_max && comfort_decel < 0.0 && comfort_decel >= a_min)) {
      throw Error(ErrorCode::kInvalidArgument, "comfort rates must lie inside the kinematic limits");
    }
    if (!(horizon > 0.0 && dt > 0.0 && dt <= horizon)) {
      throw Error(ErrorCode::kInvalidArgument, "horizon and dt must be positive with dt <= horizon");
    }
  }

  friend bool operator==(const Kinematics&, const Kinematics&) = default;
};

struct TrajectoryPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  std::string maneuver_id;
  Scheme scheme = Scheme::kS1;

  Vec2 position(std::size_t k) const { return {points[k].x, points[k].y}; }
};

// Velocity profile: a cubic on [0, tau] followed by constant v_end. The transition form
// v0 + dv * (3u^2 - 2u^3), u = t / tau, has zero acceleration at both ends.
struct SpeedProfile {
  double v0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double tau = 0.0;
  double v_end = 0.0;

  static SpeedProfile constant(double v) { return {v, 0.0, 0.0, 0.0, 0.0, v}; }

  static SpeedProfile transition(double v0, double v1, double tau) {
    const double dv = v1 - v0;
    return {v0, 0.0, 3.0 * dv / (tau * tau), -2.0 * dv / (tau * tau * tau), tau, v1};
  }

  // Cubic over the whole horizon with v(0)=v0, v(T)=v1, a(T)=0 and the given travelled distance.
  static SpeedProfile matching_distance(double v0, double v1, double distance, double horizon) {
    const double dv = v1 - v0;
    const double mean_excess = distance / horizon - v0;
    const double b3 = 12.0 * (mean_excess - 2.0 * dv / 3.0);
    const double b2 = -dv - 2.0 * b3;
    const double b1 = 2.0 * dv + b3;
    const double T = horizon;
    return {v0, b1 / T, b2 / (T * T), b3 / (T * T * T), T, v1};
  }

  double speed(double t) const {
    if (t >= tau) return v_end;
    return v0 + t * (c1 + t * (c2 + t * c3));
  }
  double accel(double t) const { return t >= tau ? 0.0 : c1 + t * (2.0 * c2 + 3.0 * c3 * t); }
  double jerk(double t) const { return t >= tau ? 0.0 : 2.0 * c2 + 6.0 * c3 * t; }

  double travelled(double t) const {
    const double tc = std::min(t, tau);
    const double s = tc * (v0 + tc * (c1 / 2.0 + tc * (c2 / 3.0 + tc * c3 / 4.0)));
    return t > tau ? s + v_end * (t - tau) : s;
  }

  bool within_limits(const Kinematics& kin) const {
    constexpr double kTol = 1e-9;
    if (tau <= 0.0) return v_end >= -kTol;
    std::array<double, 4> times{0.0, tau, 0.0, 0.0};
    std::size_t n = 2;
    // Interior extrema of v (roots of a) and of a (vertex).
    if (std::abs(c3) > 0.0) {
      const double disc = 4.0 * c2 * c2 - 12.0 * c3 * c1;
      if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        for (double root : {(-2.0 * c2 + r) / (6.0 * c3), (-2.0 * c2 - r) / (6.0 * c3)}) {
          if (root > 0.0 && root < tau) times[n++] = root;
        }
      }
      const double vertex = -c2 / (3.0 * c3);
      if (vertex > 0.0 && vertex < tau && n < times.size()) times[n++] = vertex;
    } else if (std::abs(c2) > 0.0) {
      const double root = -c1 / (2.0 * c2);
      if (root > 0.0 && root < tau) times[n++] = root;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double t = times[k];
      if (speed(t) < -kTol) return false;
      const double a = c1 + t * (2.0 * c2 + 3.0 * c3 * t);
      if (a < kin.a_min - kTol || a > kin.a_max + kTol) return false;
    }
    const double j0 = 2.0 * c2;
    const double j1 = 2.0 * c2 + 6.0 * c3 * tau;
    if (std::abs(j0) > kin.j_max + kTol || std::abs(j1) > kin.j_max + kTol) return false;
    return v_end >= -kTol;
  }
};

namespace detail {

struct Reach {
  double distance;
  double v_end;
  double tau;  // duration of the speed transition, capped at the horizon
};

// Distance covered by a jerk-limited transition toward v_target at acceleration magnitude accel,
// holding the target once reached. If the target is out of reach within the horizon, the speed
// change is truncated to what the rates allow.
inline Reach normative_reach(double v0, double v_target, double accel, double jerk, double horizon) {
  const double dv = v_target - v0;
  if (dv == 0.0) return {v0 * horizon, v0, 0.0};
  const double mag = std::abs(dv);
  const double tau = std::max(1.5 * mag / accel, std::sqrt(6.0 * mag / jerk));
  if (tau <= horizon) return {v_target * horizon + (v0 - v_target) * tau / 2.0, v_target, tau};
  const double reachable = std::min(accel * horizon / 1.5, jerk * horizon * horizon / 6.0);
  const double v_end = v0 + std::copysign(reachable, dv);
  return {horizon * (v0 + v_end) / 2.0, v_end, horizon};
}

// Placement distance for an endpoint that must arrive at exactly v_bound, using the physical
// limits; if even those cannot complete the change, the smooth full-horizon distance is used and
// the trajectory generator will reject it.
inline double bound_distance(double v0, double v_bound, const Kinematics& kin) {
  const double dv = v_bound - v0;
  if (dv == 0.0) return v0 * kin.horizon;
  const double accel = dv > 0.0 ? kin.a_max : -kin.a_min;
  const double mag = std::abs(dv);
  const double tau = std::min(kin.horizon, std::max(1.5 * mag / accel, std::sqrt(6.0 * mag / kin.j_max)));
  return v_bound * kin.horizon + (v0 - v_bound) * tau / 2.0;
}

inline Vec2 point_on_lane(const Polyline& lane, double s, double lateral) {
  const Vec2 p = lane.point_at(s);
  return p + lateral * lane.left_normal_at(s);
}

}  // namespace detail

// Lattice endpoints for one agent/maneuver pair. The first endpoint is always the S(1) point.
// Bound order: (left, v_lo), (right, v_lo), (left, v_hi), (right, v_hi).
inline std::vector<LatticeEndpoint> sample_endpoints(const AgentState& state, const Maneuver& maneuver,
                                                     Scheme scheme, const Kinematics& kin,
                                                     std::size_t n_gauss, std::uint64_t seed) {
  if (!(maneuver.v_lo <= maneuver.v_hi) || maneuver.v_lo < 0.0) {
    throw Error(ErrorCode::kUnknownManeuver, "maneuver '" + maneuver.id + "' has no valid envelope");
  }
  const Polyline lane(state.lane.centerline);
  const double s0 = lane.project(state.position);
  const auto check_reach = [&](double s) {
    if (s > lane.length() + 1e-6) {
      throw Error(ErrorCode::kDegenerateLane, "lane '" + state.lane.id + "' is shorter than the required travel");
    }
  };

  const double accel = maneuver.target_speed >= state.speed ? kin.comfort_accel : -kin.comfort_decel;
  const detail::Reach s1 =
      detail::normative_reach(state.speed, maneuver.target_speed, accel, kin.j_max, kin.horizon);
  check_reach(s0 + s1.distance);
  const Vec2 p1 = lane.point_at(s0 + s1.distance);
  std::vector<LatticeEndpoint> out{{p1.x, p1.y, s1.v_end}};

  if (scheme == Scheme::kBound) {
    for (double v_bound : {maneuver.v_lo, maneuver.v_hi}) {
      const double s = s0 + detail::bound_distance(state.speed, v_bound, kin);
      check_reach(s);
      for (double side : {1.0, -1.0}) {
        const Vec2 p = detail::point_on_lane(lane, s, side * state.lane.half_width);
        out.push_back({p.x, p.y, v_bound});
      }
    }
  } else if (scheme == Scheme::kGauss) {
    Rng rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < n_gauss; ++k) {
      LatticeEndpoint e{p1.x + unit(rng), p1.y + unit(rng), s1.v_end + unit(rng)};
      e.v = std::max(e.v, 0.0);
      const Vec2 p{e.x, e.y};
      const double lateral = lane.lateral_offset(p);
      if (std::abs(lateral) > state.lane.half_width) {
        const Vec2 q = detail::point_on_lane(lane, lane.project(p), std::copysign(state.lane.half_width, lateral));
        e.x = q.x;
        e.y = q.y;
      }
      out.push_back(e);
    }
  }
  return out;
}

inline std::vector<LatticeEndpoint> sample_endpoints(const AgentState& state, const std::string& maneuver_id,
                                                     const ManeuverRuleTable& rules, Scheme scheme,
                                                     const Kinematics& kin, std::uint64_t seed) {
  return sample_endpoints(state, rules.resolve(maneuver_id, state), scheme, kin, kin.n_gauss, seed);
}

namespace detail {

// Cubic Hermite segment with tangents scaled by the chord length.
struct HermitePath {
  Vec2 p0, p1, m0, m1;

  Vec2 at(double u) const {
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    return h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1;
  }
};

inline constexpr std::size_t kArcSamples = 256;

}  // namespace detail

// Cubic Hermite path from the current pose to the endpoint (heading-aligned tangents), timed by a
// cubic velocity profile and resampled every kin.dt seconds.
inline Trajectory generate_trajectory(const AgentState& state, const LatticeEndpoint& endpoint,
                                      const Kinematics& kin, std::string maneuver_id = {},
                                      Scheme scheme = Scheme::kS1) {
  const double T = kin.horizon;
  const double v0 = state.speed;
  const double v1 = endpoint.v;
  if (v1 < 0.0) throw Error(ErrorCode::kInfeasible, "negative endpoint speed");
  const Vec2 start = state.position;
  const Vec2 goal{endpoint.x, endpoint.y};
  const double chord = distance(start, goal);

  detail::HermitePath path{};
  std::array<double, detail::kArcSamples + 1> cum{};
  double length = 0.0;
  if (chord > 1e-9) {
    const Polyline lane(state.lane.centerline);
    const Vec2 t1 = lane.tangent_at(lane.project(goal));
    path = {start, goal, chord * Vec2{std::cos(state.heading), std::sin(state.heading)}, chord * t1};
    Vec2 prev = start;
    for (std::size_t k = 1; k <= detail::kArcSamples; ++k) {
      const Vec2 p = path.at(static_cast<double>(k) / detail::kArcSamples);
      cum[k] = cum[k - 1] + distance(prev, p);
      prev = p;
    }
    length = cum.back();
  }

  const double max_reach = v0 * T + 0.5 * kin.a_max * T * T;
  const double min_reach =
      v0 + kin.a_min * T <= 0.0 ? v0 * v0 / (2.0 * -kin.a_min) : v0 * T + 0.5 * kin.a_min * T * T;
  if (length > max_reach + 1e-9 || length < min_reach - 1e-9) {
    throw Error(ErrorCode::kInfeasible, "endpoint not reachable within the horizon");
  }

  SpeedProfile profile;
  bool found = false;
  const double dv = v1 - v0;
  if (std::abs(dv) <= 1e-12) {
    if (std::abs(length - v0 * T) <= 1e-9 * std::max(1.0, length)) {
      profile = SpeedProfile::constant(v0);
      found = true;
    }
  } else {
    const double tau = 2.0 * (length - v1 * T) / (v0 - v1);
    if (tau > 0.0 && tau <= T * (1.0 + 1e-12)) {
      profile = SpeedProfile::transition(v0, v1, std::min(tau, T));
      found = profile.within_limits(kin);
    }
  }
  if (!found) {
    profile = SpeedProfile::matching_distance(v0, v1, length, T);
    if (!profile.within_limits(kin)) {
      throw Error(ErrorCode::kInfeasible, "speed profile violates acceleration/jerk limits");
    }
  }

  Trajectory traj;
  traj.maneuver_id = std::move(maneuver_id);
  traj.scheme = scheme;
  const std::size_t n = kin.steps();
  traj.points.reserve(n + 1);
  std::size_t seg = 1;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * kin.dt;
    TrajectoryPoint pt{t, start.x, start.y, std::max(0.0, profile.speed(t))};
    if (k == 0) pt.v = v0;
    if (length > 0.0) {
      const double s = std::clamp(profile.travelled(t), 0.0, length);
      while (seg < detail::kArcSamples && cum[seg] < s) ++seg;
      const double span = cum[seg] - cum[seg - 1];
      const double frac = span > 0.0 ? (s - cum[seg - 1]) / span : 0.0;
      const double u = (static_cast<double>(seg - 1) + frac) / detail::kArcSamples;
      const Vec2 p = k == 0 ? start : path.at(u);
      pt.x = p.x;
      pt.y = p.y;
    }
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.v)) {
      throw Error(ErrorCode::kNumericalFailure, "non-finite trajectory sample");
    }
    traj.points.push_back(pt);
  }
  return traj;
}

inline double arc_length(const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t k = 1; k < traj.points.size(); ++k) total += distance(traj.position(k - 1), traj.position(k));
  return total;
}

inline double displacement(const Trajectory& traj) {
  if (traj.points.empty()) return 0.0;
  return distance(traj.position(0), traj.position(traj.points.size() - 1));
}

inline bool same_time_grid(const Trajectory& a, const Trajectory& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    if (std::abs(a.points[k].t - b.points[k].t) > 1e-9) return false;
  }
  return true;
}

// Time-synchronized gap: minimum distance between simultaneous positions, with linear motion
// between samples. Symmetric in (a, b) to the last bit.
inline double min_distance_gap(const Trajectory& a, const Trajectory& b) {
  if (!same_time_grid(a, b) || a.points.empty()) {
    throw Error(ErrorCode::kMismatchedHorizon, "trajectories do not share a time grid");
  }
  auto rel = [&](std::size_t k) { return b.position(k) - a.position(k); };
  Vec2 r0 = rel(0);
  double best = dot(r0, r0);
  for (std::size_t k = 1; k < a.points.size(); ++k) {
    const Vec2 r1 = rel(k);
    const Vec2 d = r1 - r0;
    const double dd = dot(d, d);
    if (dd > 0.0) {
      const double u = std::clamp(-dot(r0, d) / dd, 0.0, 1.0);
      const Vec2 r = r0 + u * d;
      best = std::min(best, dot(r, r));
    }
    best = std::min(best, dot(r1, r1));
    r0 = r1;
  }
  return std::sqrt(best);
}

struct TrajectoryCheck {
  bool ok = true;
  std::string reason;
};

// Invariant check over the sampled points: time grid, start state, finite-difference
// acceleration/jerk bounds and nonnegative speed.
inline TrajectoryCheck check_trajectory(const Trajectory& traj, const AgentState& start,
                                        const Kinematics& kin, double tol = 1e-3) {
  const auto fail = [](std::string why) { return TrajectoryCheck{false, std::move(why)}; };
  const auto& pts = traj.points;
  if (pts.size() != kin.steps() + 1) return fail("wrong number of samples");
  if (pts.front().t != 0.0 || std::abs(pts.back().t - kin.horizon) > 1e-9) return fail("time grid endpoints");
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (!(pts[k].t > pts[k - 1].t)) return fail("time not strictly increasing");
  }
  if (distance(traj.position(0), start.position) > 1e-6 || std::abs(pts[0].v - start.speed) > 1e-6) {
    return fail("start state mismatch");
  }
  std::vector<double> acc;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].v < 0.0) return fail("negative speed");
    if (k > 0) acc.push_back((pts[k].v - pts[k - 1].v) / (pts[k].t - pts[k - 1].t));
  }
  for (std::size_t k = 0; k < acc.size(); ++k) {
    if (acc[k] < kin.a_min - tol || acc[k] > kin.a_max + tol) return fail("acceleration out of bounds");
    if (k > 0) {
      const double jerk = (acc[k] - acc[k - 1]) / kin.dt;
      if (std::abs(jerk) > kin.j_max + tol) return fail("jerk out of bounds");
    }
  }
  return {};
}

}  // namespace hgame
