#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hgame/level_game.hpp"
#include "hgame/maneuvers.hpp"
#include "hgame/rng.hpp"
#include "hgame/solution_concepts.hpp"
#include "hgame/trajectory_lattice.hpp"
#include "hgame/utility_model.hpp"

namespace hgame {

// Two-level game tree. Level-1 actions are maneuvers; the level-2 actions available to an agent
// are the trajectories keyed by its own maneuver. Level-2 roots are indexed by the level-1 joint
// profile index, and each root's level game carries the leaf utilities for that branch.
struct HierarchicalGame {
  std::vector<AgentId> ids;
  std::vector<AgentState> states;                               // empty for abstract games
  std::vector<std::vector<std::string>> maneuvers;              // [agent][maneuver]
  std::vector<std::vector<std::vector<Trajectory>>> trajectories;  // [agent][maneuver][trajectory]
  LevelGame level1;               // shape of the maneuver game; payoffs are filled by solving
  std::vector<LevelGame> level2;  // one per level-1 joint profile

  // Builds the tree shape from trajectory counts per (agent, maneuver); leaf utilities start at 0.
  static HierarchicalGame with_shape(std::vector<AgentId> ids, const std::vector<std::vector<std::size_t>>& counts) {
    if (ids.empty() || ids.size() != counts.size()) {
      throw Error(ErrorCode::kInvalidArgument, "one count list per agent required");
    }
    HierarchicalGame g;
    g.ids = std::move(ids);
    std::vector<std::size_t> level1_counts;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i].empty()) throw Error(ErrorCode::kEmptyActionSet, "agent without maneuvers");
      level1_counts.push_back(counts[i].size());
      std::vector<std::string> labels;
      for (std::size_t m = 0; m < counts[i].size(); ++m) {
        if (counts[i][m] == 0) throw Error(ErrorCode::kEmptyActionSet, "maneuver without trajectories");
        labels.push_back("M" + std::to_string(m));
      }
      g.maneuvers.push_back(std::move(labels));
    }
    g.level1 = LevelGame(g.ids, level1_counts);
    g.level2.reserve(g.level1.num_profiles());
    for (std::size_t root = 0; root < g.level1.num_profiles(); ++root) {
      const Profile m = g.level1.profile(root);
      std::vector<std::size_t> level2_counts(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) level2_counts[i] = counts[i][m[i]];
      g.level2.emplace_back(g.ids, std::move(level2_counts));
    }
    return g;
  }

  std::size_t num_agents() const { return ids.size(); }
  std::size_t num_maneuvers(std::size_t i) const { return level1.num_actions(i); }
  std::size_t num_trajectories(std::size_t i, std::size_t m) const {
    for (std::size_t root = 0; root < level2.size(); ++root) {
      if (level1.action_of(root, i) == m) return level2[root].num_actions(i);
    }
    return 0;
  }
  std::size_t num_roots() const { return level2.size(); }

  // Partial strategy (maneuver per agent) on the branch leading to a level-2 root.
  Profile partial_strategy(std::size_t root) const { return level1.profile(root); }

  double leaf_utility(std::span<const std::size_t> maneuver_profile, std::span<const std::size_t> trajectory_profile,
                      std::size_t agent) const {
    return level2[level1.index(maneuver_profile)].payoff(trajectory_profile, agent);
  }

  std::size_t index_of(AgentId id) const {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw Error(ErrorCode::kInvalidArgument, "agent " + std::to_string(id) + " not in game");
    return static_cast<std::size_t>(it - ids.begin());
  }

  std::size_t maneuver_index(std::size_t agent, const std::string& id) const {
    const auto& list = maneuvers[agent];
    const auto it = std::find(list.begin(), list.end(), id);
    if (it == list.end()) {
      throw Error(ErrorCode::kObservedActionMissing, "maneuver '" + id + "' not available to agent " +
                                                         std::to_string(ids[agent]));
    }
    return static_cast<std::size_t>(it - list.begin());
  }
};

struct LevelRootSet {
  int level = 1;
  std::vector<std::size_t> nodes;
};

// Level roots: the single tree root for level 1, one node per level-1 joint profile for level 2.
inline LevelRootSet level_roots(const HierarchicalGame& game, int level) {
  if (level == 1) return {1, {0}};
  if (level == 2) {
    LevelRootSet set{2, {}};
    set.nodes.resize(game.num_roots());
    for (std::size_t r = 0; r < set.nodes.size(); ++r) set.nodes[r] = r;
    return set;
  }
  throw Error(ErrorCode::kInvalidArgument, "hierarchical games have levels 1 and 2");
}

// Seed for the S(1+G) draws of one agent/maneuver, derived from the game-level seed.
inline std::uint64_t lattice_seed(std::uint64_t game_seed, AgentId agent, const std::string& maneuver) {
  return derive_seed(game_seed, {static_cast<std::uint64_t>(agent), hash_string(maneuver)});
}

// Builds the driving game: maneuvers from the rule table, trajectories from the lattice under the
// scheme (infeasible endpoints dropped, maneuvers without trajectories removed), and leaf utilities
// from the utility model.
inline HierarchicalGame build_game(const std::vector<AgentState>& agents, std::span<const PedestrianState> peds,
                                   Scheme scheme, const UtilityParams& params, const ManeuverRuleTable& rules,
                                   const Kinematics& kin, std::uint64_t seed) {
  if (agents.empty()) throw Error(ErrorCode::kInvalidArgument, "a game needs at least one agent");
  const std::size_t n = agents.size();
  HierarchicalGame shell;
  std::vector<std::vector<std::size_t>> counts(n);
  std::vector<std::vector<std::string>> labels(n);
  std::vector<std::vector<std::vector<Trajectory>>> trajs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AgentState& s = agents[i];
    for (const std::string& id : rules.actions(s)) {
      const Maneuver man = rules.resolve(id, s);
      const auto endpoints = sample_endpoints(s, man, scheme, kin, kin.n_gauss, lattice_seed(seed, s.id, id));
      std::vector<Trajectory> kept;
      for (const auto& e : endpoints) {
        try {
          kept.push_back(generate_trajectory(s, e, kin, id, scheme));
        } catch (const Error& err) {
          if (err.code() != ErrorCode::kInfeasible) throw;
        }
      }
      if (kept.empty()) continue;
      counts[i].push_back(kept.size());
      labels[i].push_back(id);
      trajs[i].push_back(std::move(kept));
    }
    if (counts[i].empty()) {
      throw Error(ErrorCode::kEmptyActionSet, "agent " + std::to_string(s.id) + " has no feasible maneuver");
    }
  }

  std::vector<AgentId> ids;
  for (const auto& a : agents) ids.push_back(a.id);
  HierarchicalGame game = HierarchicalGame::with_shape(ids, counts);
  game.states = agents;
  game.maneuvers = std::move(labels);
  game.trajectories = std::move(trajs);

  // Flatten trajectories per agent so pairwise quantities are computed once.
  std::vector<std::vector<const Trajectory*>> flat(n);
  std::vector<std::vector<std::size_t>> offset(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& list : game.trajectories[i]) {
      offset[i].push_back(flat[i].size());
      for (const auto& t : list) flat[i].push_back(&t);
    }
  }
  std::vector<std::vector<double>> own(n);  // W-weighted pedestrian + excitatory part
  for (std::size_t i = 0; i < n; ++i) {
    for (const Trajectory* t : flat[i]) {
      own[i].push_back(combine_utilities(params, 0.0, pedestrian_inhibitory_utility(*t, peds, params),
                                         excitatory_utility(*t, params)));
    }
  }
  // gaps[i][j][ti * |flat_j| + tj]
  std::vector<std::vector<std::vector<double>>> gaps(n, std::vector<std::vector<double>>(n));
  std::vector<std::vector<double>> safe(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto& g = gaps[i][j];
      g.resize(flat[i].size() * flat[j].size());
      for (std::size_t a = 0; a < flat[i].size(); ++a) {
        for (std::size_t b = 0; b < flat[j].size(); ++b) {
          g[a * flat[j].size() + b] = min_distance_gap(*flat[i][a], *flat[j][b]);
        }
      }
      const bool same_lane = agents[i].lane.id == agents[j].lane.id && !agents[i].lane.id.empty();
      safe[i][j] = params.safe_gap_for(agents[i].task, agents[j].task, same_lane);
      safe[j][i] = params.safe_gap_for(agents[j].task, agents[i].task, same_lane);
    }
  }
  auto gap = [&](std::size_t i, std::size_t a, std::size_t j, std::size_t b) {
    return i < j ? gaps[i][j][a * flat[j].size() + b] : gaps[j][i][b * flat[i].size() + a];
  };

  std::vector<std::size_t> flat_idx(n);
  for (std::size_t root = 0; root < game.num_roots(); ++root) {
    const Profile m = game.partial_strategy(root);
    LevelGame& lg = game.level2[root];
    for (std::size_t leaf = 0; leaf < lg.num_profiles(); ++leaf) {
      for (std::size_t i = 0; i < n; ++i) flat_idx[i] = offset[i][m[i]] + lg.action_of(leaf, i);
      for (std::size_t i = 0; i < n; ++i) {
        double margin = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) margin = std::min(margin, gap(i, flat_idx[i], j, flat_idx[j]) - safe[i][j]);
        }
        const double u_v = std::isinf(margin) ? 1.0 : std::erf(margin / (2.0 * params.sigma));
        lg.set_payoff(leaf, i, params.weights[0] * u_v + own[i][flat_idx[i]]);
      }
    }
  }
  return game;
}

enum class ValuePropagation { kBelief, kJoint };

inline std::string_view to_string(ValuePropagation v) { return v == ValuePropagation::kBelief ? "belief" : "joint"; }

// Outcome of solving one level game. `values` holds one per-player value vector for every
// tracked solution, with the matching joint strategy in `supports`.
struct LevelOutcome {
  std::vector<std::vector<std::size_t>> responses;  // per player: pure response actions
  std::vector<std::vector<Profile>> beliefs;        // per player: profiles supporting its value
  std::vector<Profile> supports;
  std::vector<std::vector<double>> values;
};

namespace detail {

inline std::vector<std::size_t> unique_actions(std::span<const Profile> profiles, std::size_t player) {
  std::vector<std::size_t> out;
  for (const Profile& p : profiles) out.push_back(p[player]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void add_alternative(LevelOutcome& out, Profile support, std::vector<double> values) {
  for (const auto& v : out.values) {
    if (v == values) return;
  }
  out.supports.push_back(std::move(support));
  out.values.push_back(std::move(values));
}

}  // namespace detail

inline LevelOutcome solve_level_game(const LevelGame& g, const ResponseConcept& rule,
                                     ValuePropagation propagation = ValuePropagation::kBelief) {
  const std::size_t n = g.num_players();
  LevelOutcome out;
  out.responses.resize(n);
  out.beliefs.resize(n);

  if (rule.kind == ResponseKind::kPNE) {
    const std::vector<Profile> eq = enumerate_pne(g);
    for (std::size_t i = 0; i < n; ++i) {
      out.responses[i] = detail::unique_actions(eq, i);
      out.beliefs[i] = eq;
    }
    for (const Profile& p : eq) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = g.payoff(p, i);
      out.supports.push_back(p);
      out.values.push_back(std::move(v));
    }
    return out;
  }

  std::vector<double> believed(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (rule.kind) {
      case ResponseKind::kBR: {
        out.beliefs[i] = best_response_profile(g, i);
        out.responses[i] = detail::unique_actions(out.beliefs[i], i);
        believed[i] = g.payoff(out.beliefs[i].front(), i);
        break;
      }
      case ResponseKind::kMM: {
        out.beliefs[i] = maxmin_profile(g, i);
        out.responses[i] = detail::unique_actions(out.beliefs[i], i);
        believed[i] = g.payoff(out.beliefs[i].front(), i);
        break;
      }
      case ResponseKind::kQBR: {
        const std::vector<Profile> opp = level0_opponent_profiles(g, i, rule.level0);
        const std::vector<double> values = response_values(g, i, opp);
        out.responses[i] = argmax_set(values);
        for (std::size_t a : out.responses[i]) {
          for (Profile p : opp) {
            p[i] = a;
            out.beliefs[i].push_back(std::move(p));
          }
        }
        believed[i] = values[out.responses[i].front()];
        break;
      }
      case ResponseKind::kPNE: break;
    }
  }

  if (propagation == ValuePropagation::kBelief) {
    Profile support(n);
    for (std::size_t i = 0; i < n; ++i) support[i] = out.responses[i].front();
    detail::add_alternative(out, std::move(support), std::move(believed));
    return out;
  }
  // Joint play: every combination of the players' own pure responses.
  std::vector<Profile> combos{Profile{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Profile> next;
    for (const Profile& p : combos) {
      for (std::size_t a : out.responses[i]) {
        Profile q = p;
        q.push_back(a);
        next.push_back(std::move(q));
      }
    }
    combos = std::move(next);
  }
  for (Profile& p : combos) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = g.payoff(p, i);
    detail::add_alternative(out, std::move(p), std::move(v));
  }
  return out;
}

struct HierarchicalSolution {
  ResponseConcept level2_concept;
  ResponseConcept level1_concept;
  ValuePropagation propagation = ValuePropagation::kBelief;
  std::vector<LevelOutcome> level2;       // indexed by level-2 root
  std::vector<std::vector<std::size_t>> combinations;  // chosen level-2 alternative per root
  std::vector<LevelGame> level1_games;    // one per combination
  std::vector<LevelOutcome> level1;       // one per combination
  bool truncated = false;                 // combination cap reached
};

inline constexpr std::size_t kMaxCombinations = 256;

// Solves the level game at every level-2 root.
inline std::vector<LevelOutcome> solve_level2(const HierarchicalGame& game, const ResponseConcept& level2_concept,
                                              ValuePropagation propagation = ValuePropagation::kBelief) {
  if (!level2_concept.non_strategic()) {
    throw Error(ErrorCode::kInvalidArgument, "level-2 games take non-strategic responses only");
  }
  std::vector<LevelOutcome> out;
  out.reserve(game.num_roots());
  for (const LevelGame& lg : game.level2) {
    out.push_back(solve_level_game(lg, level2_concept, propagation));
    if (out.back().values.empty()) throw Error(ErrorCode::kSolverFailure, "level-2 game without solution");
  }
  return out;
}

// Lifts solved level-2 values into the maneuver game and solves it, once per combination of
// tracked level-2 solutions.
inline HierarchicalSolution backward_induction(const HierarchicalGame& game, std::vector<LevelOutcome> level2,
                                               const ResponseConcept& level2_concept,
                                               const ResponseConcept& level1_concept,
                                               ValuePropagation propagation = ValuePropagation::kBelief,
                                               std::size_t max_combinations = kMaxCombinations) {
  if (level2.size() != game.num_roots()) throw Error(ErrorCode::kInvalidArgument, "one outcome per level-2 root");
  HierarchicalSolution sol;
  sol.level2_concept = level2_concept;
  sol.level1_concept = level1_concept;
  sol.propagation = propagation;
  sol.level2 = std::move(level2);

  std::vector<std::size_t> choice(game.num_roots(), 0);
  const std::size_t n = game.num_agents();
  while (true) {
    LevelGame g1 = game.level1;
    for (std::size_t root = 0; root < game.num_roots(); ++root) {
      const auto& v = sol.level2[root].values[choice[root]];
      for (std::size_t i = 0; i < n; ++i) g1.set_payoff(root, i, v[i]);
    }
    sol.level1.push_back(solve_level_game(g1, level1_concept, propagation));
    sol.level1_games.push_back(std::move(g1));
    sol.combinations.push_back(choice);

    std::size_t r = game.num_roots();
    while (r-- > 0) {
      if (++choice[r] < sol.level2[r].values.size()) break;
      choice[r] = 0;
    }
    if (r == static_cast<std::size_t>(-1)) break;
    if (sol.combinations.size() >= max_combinations) {
      sol.truncated = true;
      break;
    }
  }
  return sol;
}

// Backward induction over the two levels: level-2 games first, then the maneuver game.
inline HierarchicalSolution backward_induction(const HierarchicalGame& game, const ResponseConcept& level2_concept,
                                               const ResponseConcept& level1_concept,
                                               ValuePropagation propagation = ValuePropagation::kBelief,
                                               std::size_t max_combinations = kMaxCombinations) {
  return backward_induction(game, solve_level2(game, level2_concept, propagation), level2_concept, level1_concept,
                            propagation, max_combinations);
}

// Full strategies (maneuver profile, trajectory profile) that player i's solution supports in
// level-1 combination k.
inline std::vector<std::pair<Profile, Profile>> supported_strategies(const HierarchicalGame& game,
                                                                     const HierarchicalSolution& sol,
                                                                     std::size_t player, std::size_t k = 0) {
  std::vector<std::pair<Profile, Profile>> out;
  for (const Profile& m : sol.level1[k].beliefs[player]) {
    const std::size_t root = game.level1.index(m);
    for (const Profile& t : sol.level2[root].beliefs[player]) out.emplace_back(m, t);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Meta-action decoding for the normal-form reduction: (maneuver, trajectory) per meta-action.
inline std::vector<std::pair<std::size_t, std::size_t>> meta_actions(const HierarchicalGame& game, std::size_t agent) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t m = 0; m < game.num_maneuvers(agent); ++m) {
    for (std::size_t t = 0; t < game.num_trajectories(agent, m); ++t) out.emplace_back(m, t);
  }
  return out;
}

// One meta-action per full strategy (maneuver, trajectory under that maneuver).
inline LevelGame reduce_to_normal_form(const HierarchicalGame& game) {
  const std::size_t n = game.num_agents();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> meta(n);
  std::vector<std::size_t> counts(n);
  for (std::size_t i = 0; i < n; ++i) {
    meta[i] = meta_actions(game, i);
    counts[i] = meta[i].size();
  }
  LevelGame nf(game.ids, counts);
  Profile m(n), t(n);
  for (std::size_t idx = 0; idx < nf.num_profiles(); ++idx) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [mi, ti] = meta[i][nf.action_of(idx, i)];
      m[i] = mi;
      t[i] = ti;
    }
    const LevelGame& leaf_game = game.level2[game.level1.index(m)];
    const std::size_t leaf = leaf_game.index(t);
    for (std::size_t i = 0; i < n; ++i) nf.set_payoff(idx, i, leaf_game.payoff(leaf, i));
  }
  return nf;
}

}  // namespace hgame
