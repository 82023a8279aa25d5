#pragma once

#include <random>
#include <vector>

#include "hgame/hgame.hpp"

namespace hgame::test {

// East-bound straight lane along y = offset.
inline LaneRef straight_lane(std::string id = "EB", double offset = 0.0, double x0 = -50.0, double x1 = 250.0) {
  return {std::move(id), {{x0, offset}, {x1, offset}}, 1.75, 15.0};
}

inline AgentState straight_agent(AgentId id, double x, double v, double lane_y = 0.0) {
  AgentState a;
  a.id = id;
  a.position = {x, lane_y};
  a.heading = 0.0;
  a.speed = v;
  a.lane = straight_lane("EB" + std::to_string(static_cast<int>(lane_y)), lane_y);
  return a;
}

// Constant-velocity trajectory on the default time grid.
inline Trajectory uniform_motion(Vec2 start, Vec2 velocity, const Kinematics& kin = {}) {
  Trajectory t;
  for (std::size_t k = 0; k <= kin.steps(); ++k) {
    const double s = static_cast<double>(k) * kin.dt;
    t.points.push_back({s, start.x + velocity.x * s, start.y + velocity.y * s, norm(velocity)});
  }
  return t;
}

// Random payoffs; integer grids make ties common.
inline LevelGame random_level_game(Rng& rng, const std::vector<std::size_t>& counts, bool integer_payoffs) {
  LevelGame g(counts);
  std::uniform_real_distribution<double> real(-1.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 3);
  for (std::size_t idx = 0; idx < g.num_profiles(); ++idx) {
    for (std::size_t i = 0; i < g.num_players(); ++i) {
      g.set_payoff(idx, i, integer_payoffs ? grid(rng) : real(rng));
    }
  }
  return g;
}

// Random tree with 1..max_agents agents, 1..max_maneuvers maneuvers and 1..max_trajectories
// trajectories per maneuver.
inline HierarchicalGame random_hierarchical_game(Rng& rng, std::size_t max_agents, std::size_t max_maneuvers,
                                                 std::size_t max_trajectories, bool integer_payoffs) {
  std::uniform_int_distribution<std::size_t> na(1, max_agents), nm(1, max_maneuvers), nt(1, max_trajectories);
  std::vector<AgentId> ids(na(rng));
  std::vector<std::vector<std::size_t>> counts(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i] = static_cast<AgentId>(10 + i);
    counts[i].resize(nm(rng));
    for (auto& c : counts[i]) c = nt(rng);
  }
  HierarchicalGame g = HierarchicalGame::with_shape(ids, counts);
  std::uniform_real_distribution<double> real(-1.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 3);
  for (auto& lg : g.level2) {
    for (std::size_t idx = 0; idx < lg.num_profiles(); ++idx) {
      for (std::size_t i = 0; i < lg.num_players(); ++i) lg.set_payoff(idx, i, integer_payoffs ? grid(rng) : real(rng));
    }
  }
  return g;
}

inline LevelGame two_player(const std::vector<std::vector<double>>& u0, const std::vector<std::vector<double>>& u1) {
  LevelGame g(std::vector<std::size_t>{u0.size(), u0.front().size()});
  for (std::size_t a = 0; a < u0.size(); ++a) {
    for (std::size_t b = 0; b < u0[a].size(); ++b) {
      const Profile p{a, b};
      g.set_payoff(g.index(p), 0, u0[a][b]);
      g.set_payoff(g.index(p), 1, u1[a][b]);
    }
  }
  return g;
}

inline double sum(const MixedResponse& r) {
  double s = 0.0;
  for (double p : r.probs) s += p;
  return s;
}

}  // namespace hgame::test
