#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "hgame/trajectory_lattice.hpp"
#include "hgame/types.hpp"

namespace hgame {

struct UtilityParams {
  // Weights for (vehicle inhibitory, pedestrian inhibitory, excitatory).
  std::array<double, 3> weights{0.25, 0.5, 0.25};
  double goal_distance = 100.0;  // d_g
  double sigma = 1.5;
  // Minimum safe gap for conflicting agents, keyed by (ego task, other task).
  std::map<std::pair<Task, Task>, double> safe_gap;
  double safe_gap_same_lane = 3.0;  // follower/leader pairs
  double stop_threshold = 2.0;      // displacement below which a trajectory counts as waiting
  double pedestrian_vicinity = 15.0;

  static UtilityParams defaults() {
    UtilityParams p;
    for (Task a : kAllTasks) {
      for (Task b : kAllTasks) p.safe_gap[{a, b}] = 5.0;
    }
    return p;
  }

  double safe_gap_for(Task ego, Task other, bool same_lane) const {
    if (same_lane) return safe_gap_same_lane;
    const auto it = safe_gap.find({ego, other});
    if (it == safe_gap.end()) {
      throw Error(ErrorCode::kInvalidArgument, "no safe gap configured for (" + std::string(to_string(ego)) + ", " +
                                                   std::string(to_string(other)) + ")");
    }
    return it->second;
  }

  void validate() const {
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw Error(ErrorCode::kInvalidArgument, "utility weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::kInvalidArgument, "utility weights must sum to 1");
    if (!(goal_distance > 0.0) || !(sigma > 0.0) || !(safe_gap_same_lane > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "goal distance, sigma and safe gaps must be positive");
    }
    for (const auto& [key, gap] : safe_gap) {
      if (!(gap > 0.0)) throw Error(ErrorCode::kInvalidArgument, "safe gaps must be positive");
    }
  }

  friend bool operator==(const UtilityParams&, const UtilityParams&) = default;
};

inline double excitatory_utility(double path_length, const UtilityParams& params) {
  return std::min(path_length / params.goal_distance, 1.0);
}

inline double excitatory_utility(const Trajectory& traj, const UtilityParams& params) {
  return excitatory_utility(arc_length(traj), params);
}

// Closed form of the expected erf sigmoid when its location is N(d_star, sigma^2).
inline double vehicle_inhibitory_utility(double gap, double safe_gap, double sigma) {
  return std::erf((gap - safe_gap) / (2.0 * sigma));
}

inline double distance_to_path(const Trajectory& traj, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  const auto& pts = traj.points;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Vec2 a = traj.position(k);
    if (k + 1 == pts.size()) {
      best = std::min(best, distance(a, p));
      break;
    }
    const Vec2 ab = traj.position(k + 1) - a;
    const double len2 = dot(ab, ab);
    const double u = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, distance(a + u * ab, p));
  }
  return best;
}

// -1 when the trajectory proceeds while a pedestrian is on the crosswalk to be traversed or has
// the right of way nearby; +1 otherwise.
inline double pedestrian_inhibitory_utility(const Trajectory& traj, std::span<const PedestrianState> peds,
                                            const UtilityParams& params) {
  if (displacement(traj) < params.stop_threshold) return 1.0;
  for (const auto& ped : peds) {
    if (ped.on_conflicting_crosswalk) return -1.0;
    if (ped.has_right_of_way && distance_to_path(traj, ped.position) <= params.pedestrian_vicinity) return -1.0;
  }
  return 1.0;
}

inline double combine_utilities(const UtilityParams& params, double vehicle_inh, double pedestrian_inh,
                                 double excitatory) {
  return params.weights[0] * vehicle_inh + params.weights[1] * pedestrian_inh + params.weights[2] * excitatory;
}

// Full payoff of trajectory traj_i against the opponents' trajectories. safe_gaps[j] is the
// minimum safe gap toward others[j]; the vehicle term uses the tightest gap margin over opponents.
inline double combined_utility(const Trajectory& traj_i, std::span<const Trajectory> others,
                               std::span<const double> safe_gaps, std::span<const PedestrianState> peds,
                               const UtilityParams& params) {
  if (safe_gaps.size() != others.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one safe gap per opponent required");
  }
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < others.size(); ++j) {
    margin = std::min(margin, min_distance_gap(traj_i, others[j]) - safe_gaps[j]);
  }
  const double u_v = std::isinf(margin) ? 1.0 : std::erf(margin / (2.0 * params.sigma));
  return combine_utilities(params, u_v, pedestrian_inhibitory_utility(traj_i, peds, params),
                           excitatory_utility(traj_i, params));
}

inline double combined_utility(const Trajectory& traj_i, std::span<const Trajectory> others,
                               std::span<const PedestrianState> peds, const UtilityParams& params,
                               double safe_gap) {
  const std::vector<double> gaps(others.size(), safe_gap);
  return combined_utility(traj_i, others, gaps, peds, params);
}

}  // namespace hgame
