#include <gtest/gtest.h>

#include <set>

#include "helpers.hpp"

using namespace hgame;
using test::random_hierarchical_game;
using test::straight_agent;

namespace {

const ResponseConcept kBR{ResponseKind::kBR, false, 0.0, ResponseKind::kBR};
const ResponseConcept kMM{ResponseKind::kMM, false, 0.0, ResponseKind::kMM};

AgentState turning(AgentId id, double lane_y, double v, Task task = Task::kLeftTurn) {
  AgentState a = straight_agent(id, 0.0, v, lane_y);
  a.task = task;
  a.segment = Segment::kApproach;
  a.light = Light::kGreen;
  return a;
}

HierarchicalGame build(const std::vector<AgentState>& agents, Scheme scheme, std::uint64_t seed = 1) {
  return build_game(agents, {}, scheme, UtilityParams::defaults(), ManeuverRuleTable::defaults(), Kinematics{}, seed);
}

// Global argmax leaves of the flattened game for player i, decoded into (maneuvers, trajectories).
std::vector<std::pair<Profile, Profile>> normal_form_best(const HierarchicalGame& game, std::size_t i) {
  const LevelGame nf = reduce_to_normal_form(game);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> meta;
  for (std::size_t j = 0; j < game.num_agents(); ++j) meta.push_back(meta_actions(game, j));
  std::vector<std::pair<Profile, Profile>> out;
  for (const Profile& p : best_response_profile(nf, i)) {
    Profile m(p.size()), t(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) std::tie(m[j], t[j]) = meta[j][p[j]];
    out.emplace_back(m, t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(LevelRoots, Counts) {
  const HierarchicalGame two = build({turning(1, 0.0, 8.0), turning(2, 20.0, 8.0)}, Scheme::kS1);
  EXPECT_EQ(level_roots(two, 1).nodes.size(), 1u);
  EXPECT_EQ(level_roots(two, 2).nodes.size(), 4u);
  const HierarchicalGame three =
      build({turning(1, 0.0, 8.0), turning(2, 20.0, 8.0), turning(3, 40.0, 8.0, Task::kRightTurn)}, Scheme::kS1);
  EXPECT_EQ(level_roots(three, 2).nodes.size(), 8u);
  const HierarchicalGame single = HierarchicalGame::with_shape({1}, {{1, 1, 1}});
  EXPECT_EQ(level_roots(single, 2).nodes.size(), 3u);
  EXPECT_THROW(level_roots(single, 3), Error);
}

TEST(LevelRoots, PartitionTheLeaves) {
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const HierarchicalGame g = random_hierarchical_game(rng, 3, 3, 3, false);
    std::size_t leaves = 0;
    std::set<Profile> prefixes;
    for (std::size_t root : level_roots(g, 2).nodes) {
      prefixes.insert(g.partial_strategy(root));
      leaves += g.level2[root].num_profiles();
    }
    EXPECT_EQ(prefixes.size(), g.num_roots());
    EXPECT_EQ(leaves, reduce_to_normal_form(g).num_profiles());
  }
}

TEST(BuildGame, S1GivesOneByOneLevel2Games) {
  const HierarchicalGame g = build({turning(1, 0.0, 8.0), turning(2, 20.0, 8.0)}, Scheme::kS1);
  for (const auto& lg : g.level2) EXPECT_EQ(lg.num_profiles(), 1u);
  const auto sol = backward_induction(g, kBR, kBR);
  ASSERT_EQ(sol.level1_games.size(), 1u);
  for (std::size_t root = 0; root < g.num_roots(); ++root) {
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(sol.level1_games[0].payoff(root, i), g.level2[root].payoff(0, i));
  }
}

TEST(BuildGame, SingleAgentSingleManeuver) {
  AgentState a = turning(1, 0.0, 8.0, Task::kThrough);
  a.light = Light::kRed;
  const HierarchicalGame g = build({a}, Scheme::kS1);
  ASSERT_EQ(g.num_maneuvers(0), 1u);
  EXPECT_EQ(g.maneuvers[0][0], "DECELERATE");
  const auto sol = backward_induction(g, kBR, kBR);
  const auto s = supported_strategies(g, sol, 0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].first, (Profile{0}));
  EXPECT_EQ(s[0].second, (Profile{0}));
}

TEST(BuildGame, SingleAgentPicksTheBestLeaf) {
  const HierarchicalGame g = build({turning(1, 0.0, 8.0)}, Scheme::kBound);
  const auto sol = backward_induction(g, kBR, kBR);
  EXPECT_EQ(supported_strategies(g, sol, 0), normal_form_best(g, 0));
  double best = -1e9;
  for (const auto& lg : g.level2) {
    for (std::size_t t = 0; t < lg.num_profiles(); ++t) best = std::max(best, lg.payoff(t, 0));
  }
  EXPECT_EQ(sol.level1[0].values[0][0], best);
}

TEST(BuildGame, UtilitiesStayInRange) {
  const HierarchicalGame g =
      build({turning(1, 0.0, 8.0), turning(2, 3.0, 10.0, Task::kThrough), turning(3, 6.0, 4.0)}, Scheme::kGauss, 5);
  for (const auto& lg : g.level2) {
    for (std::size_t idx = 0; idx < lg.num_profiles(); ++idx) {
      for (std::size_t i = 0; i < lg.num_players(); ++i) {
        EXPECT_GE(lg.payoff(idx, i), -0.75);
        EXPECT_LE(lg.payoff(idx, i), 1.0);
      }
    }
  }
}

TEST(BuildGame, Deterministic) {
  const std::vector<AgentState> agents{turning(1, 0.0, 8.0), turning(2, 3.0, 10.0, Task::kThrough)};
  const HierarchicalGame a = build(agents, Scheme::kGauss, 9);
  const HierarchicalGame b = build(agents, Scheme::kGauss, 9);
  ASSERT_EQ(a.num_roots(), b.num_roots());
  EXPECT_EQ(a.maneuvers, b.maneuvers);
  for (std::size_t r = 0; r < a.num_roots(); ++r) {
    ASSERT_EQ(a.level2[r].num_profiles(), b.level2[r].num_profiles());
    for (std::size_t idx = 0; idx < a.level2[r].num_profiles(); ++idx) {
      for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.level2[r].payoff(idx, i), b.level2[r].payoff(idx, i));
    }
  }
  const auto sa = backward_induction(a, kMM, kBR);
  const auto sb = backward_induction(b, kMM, kBR);
  EXPECT_EQ(sa.combinations, sb.combinations);
  for (std::size_t k = 0; k < sa.level1.size(); ++k) {
    EXPECT_EQ(sa.level1[k].values, sb.level1[k].values);
    EXPECT_EQ(sa.level1[k].beliefs, sb.level1[k].beliefs);
  }
}

TEST(BuildGame, Errors) {
  EXPECT_THROW(build({}, Scheme::kS1), Error);
  AgentState stuck = turning(1, 0.0, 8.0);
  stuck.lane.centerline = {{-1, 0}, {5, 0}};
  try {
    build({stuck}, Scheme::kS1);
    FAIL() << "short lane accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateLane);
  }
  EXPECT_THROW(HierarchicalGame::with_shape({1}, {{}}), Error);
  EXPECT_THROW(HierarchicalGame::with_shape({1}, {{2, 0}}), Error);
}

TEST(BackwardInduction, BestResponseMatchesNormalForm) {
  Rng rng(200);
  for (int k = 0; k < 200; ++k) {
    const HierarchicalGame g = random_hierarchical_game(rng, 3, 3, 3, k % 2 == 0);
    const auto sol = backward_induction(g, kBR, kBR);
    const LevelGame nf = reduce_to_normal_form(g);
    for (std::size_t i = 0; i < g.num_agents(); ++i) {
      EXPECT_EQ(supported_strategies(g, sol, i), normal_form_best(g, i)) << "game " << k << " agent " << i;
      double best = -1e9;
      for (std::size_t idx = 0; idx < nf.num_profiles(); ++idx) best = std::max(best, nf.payoff(idx, i));
      for (const auto& outcome : sol.level1) EXPECT_NEAR(outcome.values[0][i], best, 1e-12);
    }
  }
}

TEST(BackwardInduction, ValuesAreConserved) {
  Rng rng(33);
  for (int k = 0; k < 100; ++k) {
    const HierarchicalGame g = random_hierarchical_game(rng, 3, 3, 3, true);
    for (const auto& l2 : {kBR, kMM}) {
      const auto sol = backward_induction(g, l2, kBR, k % 2 == 0 ? ValuePropagation::kBelief : ValuePropagation::kJoint);
      for (std::size_t c = 0; c < sol.level1_games.size(); ++c) {
        for (std::size_t root = 0; root < g.num_roots(); ++root) {
          const auto& rec = sol.level2[root].values;
          std::vector<double> lifted(g.num_agents());
          for (std::size_t i = 0; i < g.num_agents(); ++i) lifted[i] = sol.level1_games[c].payoff(root, i);
          EXPECT_NE(std::find(rec.begin(), rec.end(), lifted), rec.end());
        }
      }
    }
  }
}

TEST(BackwardInduction, TracksEveryLevel2Combination) {
  // Two roots for agent 0; joint propagation with tied trajectories yields two alternatives each.
  HierarchicalGame g = HierarchicalGame::with_shape({1, 2}, {{2, 2}, {1}});
  for (auto& lg : g.level2) {
    lg.set_payoff(0, 0, 1.0);
    lg.set_payoff(1, 0, 1.0);
    lg.set_payoff(0, 1, 0.0);
    lg.set_payoff(1, 1, 2.0);
  }
  const auto sol = backward_induction(g, kBR, kBR, ValuePropagation::kJoint);
  EXPECT_EQ(sol.combinations.size(), 4u);
  EXPECT_FALSE(sol.truncated);
  const auto capped = backward_induction(g, kBR, kBR, ValuePropagation::kJoint, 3);
  EXPECT_EQ(capped.combinations.size(), 3u);
  EXPECT_TRUE(capped.truncated);
}

TEST(BackwardInduction, Level2MustBeNonStrategic) {
  Rng rng(2);
  const HierarchicalGame g = random_hierarchical_game(rng, 2, 2, 2, false);
  const ResponseConcept pne{ResponseKind::kPNE, true, 0.0, ResponseKind::kBR};
  EXPECT_THROW(backward_induction(g, pne, kBR), Error);
}

TEST(NormalForm, MetaActionsAndPayoffs) {
  const HierarchicalGame shape = HierarchicalGame::with_shape({1, 2}, {{3, 3}, {1, 2}});
  EXPECT_EQ(meta_actions(shape, 0).size(), 6u);
  EXPECT_EQ(meta_actions(shape, 1).size(), 3u);
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const HierarchicalGame g = random_hierarchical_game(rng, 3, 3, 3, false);
    const LevelGame nf = reduce_to_normal_form(g);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> meta;
    for (std::size_t j = 0; j < g.num_agents(); ++j) meta.push_back(meta_actions(g, j));
    for (std::size_t idx = 0; idx < nf.num_profiles(); ++idx) {
      Profile m(g.num_agents()), t(g.num_agents());
      for (std::size_t j = 0; j < g.num_agents(); ++j) std::tie(m[j], t[j]) = meta[j][nf.action_of(idx, j)];
      for (std::size_t i = 0; i < g.num_agents(); ++i) EXPECT_EQ(nf.payoff(idx, i), g.leaf_utility(m, t, i));
    }
  }
}
