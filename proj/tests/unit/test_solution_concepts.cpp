#include <gtest/gtest.h>

#include <set>

#include "helpers.hpp"

using namespace hgame;
using test::random_level_game;
using test::two_player;

namespace {

// Row player's utilities [[3,1],[2,0]]; the column player's are irrelevant for non-strategic rules.
LevelGame textbook() { return two_player({{3, 1}, {2, 0}}, {{0, 0}, {0, 0}}); }

void expect_simplex(const MixedResponse& r) {
  double s = 0.0;
  for (double p : r.probs) {
    EXPECT_GE(p, 0.0);
    s += p;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

// Deviation check written against explicit profile vectors.
std::vector<Profile> brute_force_pne(const LevelGame& g) {
  std::vector<Profile> out;
  for (std::size_t idx = 0; idx < g.num_profiles(); ++idx) {
    const Profile p = g.profile(idx);
    bool ok = true;
    for (std::size_t i = 0; i < g.num_players(); ++i) {
      for (std::size_t a = 0; a < g.num_actions(i); ++a) {
        Profile q = p;
        q[i] = a;
        if (g.payoff(q, i) > g.payoff(p, i)) ok = false;
      }
    }
    if (ok) out.push_back(p);
  }
  return out;
}

std::vector<std::size_t> random_counts(Rng& rng, std::size_t max_players, std::size_t max_actions) {
  std::uniform_int_distribution<std::size_t> np(1, max_players), na(1, max_actions);
  std::vector<std::size_t> c(np(rng));
  for (auto& x : c) x = na(rng);
  return c;
}

LevelGame shifted(const LevelGame& g, std::size_t i, double c) {
  LevelGame h = g;
  for (std::size_t idx = 0; idx < g.num_profiles(); ++idx) h.set_payoff(idx, i, g.payoff(idx, i) + c);
  return h;
}

}  // namespace

TEST(BestResponse, Examples) {
  const auto br = best_response_profile(textbook(), 0);
  ASSERT_EQ(br.size(), 1u);
  EXPECT_EQ(br[0], (Profile{0, 0}));
  EXPECT_EQ(best_response_profile(two_player({{1, 1}, {1, 1}}, {{0, 0}, {0, 0}}), 0).size(), 4u);
  LevelGame single(std::vector<std::size_t>{1, 1});
  EXPECT_EQ(best_response_profile(single, 1), (std::vector<Profile>{{0, 0}}));
}

TEST(Maxmin, Examples) {
  const auto mm = maxmin_profile(textbook(), 0);
  ASSERT_EQ(mm.size(), 1u);
  EXPECT_EQ(mm[0], (Profile{0, 1}));
  const auto flat = maxmin_profile(two_player({{1, 1}, {1, 1}}, {{0, 0}, {0, 0}}), 0);
  std::set<std::size_t> rows;
  for (const auto& p : flat) rows.insert(p[0]);
  EXPECT_EQ(rows, (std::set<std::size_t>{0, 1}));
  EXPECT_EQ(maxmin_profile(LevelGame(std::vector<std::size_t>{1}), 0), (std::vector<Profile>{{0}}));
}

TEST(NoisyResponses, Examples) {
  const LevelGame uniform3(std::vector<std::size_t>{3, 2});
  for (double p : noisy_br(uniform3, 0, 0.0).probs) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  for (double p : noisy_mm(uniform3, 0, 0.0).probs) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);

  // Optimistic utilities (1, 0.5).
  const LevelGame g = two_player({{1.0, 0.2}, {0.5, 0.1}}, {{0, 0}, {0, 0}});
  const auto br = noisy_br(g, 0, 2.0);
  EXPECT_NEAR(br[0], 0.7311, 1e-4);
  EXPECT_NEAR(br[1], 0.2689, 1e-4);

  // Worst-case utilities (1, 0).
  const LevelGame h = two_player({{1.0, 2.0}, {0.0, 3.0}}, {{0, 0}, {0, 0}});
  const auto mm = noisy_mm(h, 0, 1.0);
  EXPECT_NEAR(mm[0], 0.7311, 1e-4);
  EXPECT_NEAR(mm[1], 0.2689, 1e-4);

  EXPECT_GT(noisy_br(textbook(), 0, 1e3)[0], 0.999);
}

TEST(Qbr, Examples) {
  const LevelGame g = two_player({{0.6, 0.0}, {0.4, 1.0}}, {{0, 0}, {0, 0}});
  const std::vector<Profile> opp{{0, 0}};
  const auto r = qbr(g, 0, opp, 5.0);
  EXPECT_NEAR(r[0], 0.7311, 1e-4);
  EXPECT_NEAR(r[1], 0.2689, 1e-4);
  EXPECT_DOUBLE_EQ(qbr(g, 0, opp, 0.0)[0], 0.5);
  EXPECT_GT(qbr(g, 0, opp, 1e4)[0], 0.999);
}

TEST(Qbr, AveragesOverOpponentLevel0Solutions) {
  // Column player is indifferent, so both columns are its BR solutions.
  const LevelGame g = two_player({{1.0, 0.0}, {0.0, 2.0}}, {{1, 1}, {1, 1}});
  const auto opp = level0_opponent_profiles(g, 0, ResponseKind::kBR);
  ASSERT_EQ(opp.size(), 2u);
  const auto r = qbr(g, 0, opp, 1.0);
  const std::vector<double> values{0.5, 1.0};
  const auto expected = logit_response(values, 1.0);
  EXPECT_NEAR(r[0], expected[0], 1e-15);
}

TEST(Ql1, MixtureExamples) {
  Rng rng(3);
  const LevelGame g = random_level_game(rng, {3, 2}, false);
  const auto l0 = noisy_br(g, 0, 2.0);
  const auto opp = level0_opponent_profiles(g, 0, ResponseKind::kBR);
  const auto l1 = qbr(g, 0, opp, 3.0);
  const auto at1 = ql1_response(g, 0, ResponseKind::kBR, 1.0, 2.0, 3.0);
  const auto at0 = ql1_response(g, 0, ResponseKind::kBR, 0.0, 2.0, 3.0);
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_EQ(at1[a], l0[a]);
    EXPECT_EQ(at0[a], l1[a]);
  }
  const auto m = mix(0.5, MixedResponse{{0.8, 0.2}}, MixedResponse{{0.6, 0.4}});
  EXPECT_NEAR(m[0], 0.7, 1e-15);
  EXPECT_NEAR(m[1], 0.3, 1e-15);
  EXPECT_THROW(ql1_response(g, 0, ResponseKind::kBR, 1.5, 1.0, 1.0), Error);
}

TEST(Ql1, ConvexCombinationOfComponents) {
  Rng rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0), lam(0.0, 20.0);
  for (int k = 0; k < 200; ++k) {
    const LevelGame g = random_level_game(rng, random_counts(rng, 3, 4), k % 2 == 0);
    const ResponseKind kind = k % 3 == 0 ? ResponseKind::kMM : ResponseKind::kBR;
    const double alpha = u(rng), l0 = lam(rng), l1 = lam(rng);
    const auto a = ql1_response(g, 0, kind, alpha, l0, l1);
    const auto p0 = kind == ResponseKind::kMM ? noisy_mm(g, 0, l0) : noisy_br(g, 0, l0);
    const auto opp = level0_opponent_profiles(g, 0, kind);
    const auto p1 = qbr(g, 0, opp, l1);
    expect_simplex(a);
    for (std::size_t x = 0; x < a.size(); ++x) {
      EXPECT_EQ(a[x], alpha * p0[x] + (1.0 - alpha) * p1[x]);
      EXPECT_GE(a[x], std::min(p0[x], p1[x]) - 1e-15);
      EXPECT_LE(a[x], std::max(p0[x], p1[x]) + 1e-15);
    }
  }
}

TEST(Pne, Examples) {
  // Prisoner's dilemma, action 1 = defect.
  const LevelGame pd = two_player({{3, 0}, {5, 1}}, {{3, 5}, {0, 1}});
  EXPECT_EQ(enumerate_pne(pd), (std::vector<Profile>{{1, 1}}));
  const LevelGame coord = two_player({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}});
  EXPECT_EQ(enumerate_pne(coord), (std::vector<Profile>{{0, 0}, {1, 1}}));
  const LevelGame pennies = two_player({{1, -1}, {-1, 1}}, {{-1, 1}, {1, -1}});
  EXPECT_TRUE(enumerate_pne(pennies).empty());
  // Ties admit equilibria.
  EXPECT_EQ(enumerate_pne(LevelGame(std::vector<std::size_t>{2, 2})).size(), 4u);
}

TEST(Pne, MatchesBruteForceOnRandomGames) {
  Rng rng(500);
  std::size_t with_ties = 0;
  for (int k = 0; k < 500; ++k) {
    const bool ints = k % 2 == 0;
    const LevelGame g = random_level_game(rng, random_counts(rng, 3, 4), ints);
    const auto fast = enumerate_pne(g);
    EXPECT_EQ(fast, brute_force_pne(g));
    if (ints && fast.size() > 1) ++with_ties;
  }
  EXPECT_GT(with_ties, 0u);
}

TEST(PneQe, Examples) {
  // Unique PNE (0,0); row regrets (0, 0.5).
  const LevelGame g = two_player({{1.0, 0.0}, {0.5, 0.2}}, {{1.0, 0.0}, {1.0, 0.0}});
  const auto pne = enumerate_pne(g);
  ASSERT_EQ(pne, (std::vector<Profile>{{0, 0}}));
  const auto r = pne_qe_response(g, 0, pne, 2.0);
  EXPECT_NEAR(r[0], 0.7311, 1e-4);
  EXPECT_NEAR(r[1], 0.2689, 1e-4);
  EXPECT_DOUBLE_EQ(pne_qe_response(g, 0, pne, 0.0)[1], 0.5);
  try {
    pne_qe_response(g, 0, {}, 1.0);
    FAIL() << "empty equilibrium set accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyEquilibriumSet);
  }
}

TEST(PneQe, EquilibriumActionsGetMaximalProbability) {
  Rng rng(77);
  std::size_t checked = 0;
  for (int k = 0; k < 300; ++k) {
    const LevelGame g = random_level_game(rng, random_counts(rng, 3, 4), k % 2 == 0);
    const auto pne = enumerate_pne(g);
    if (pne.empty()) continue;
    for (std::size_t i = 0; i < g.num_players(); ++i) {
      const auto r = pne_qe_response(g, i, pne, 3.0);
      expect_simplex(r);
      const double top = *std::max_element(r.probs.begin(), r.probs.end());
      for (const Profile& eq : pne) EXPECT_EQ(r[eq[i]], top);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(Invariants, ShiftInvariance) {
  Rng rng(9);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int k = 0; k < 200; ++k) {
    const LevelGame g = random_level_game(rng, random_counts(rng, 3, 4), true);
    const double c = std::round(shift(rng));
    const LevelGame h = shifted(g, 0, c);
    EXPECT_EQ(noisy_br(g, 0, 1.7).probs, noisy_br(h, 0, 1.7).probs);
    EXPECT_EQ(noisy_mm(g, 0, 1.7).probs, noisy_mm(h, 0, 1.7).probs);
    const auto opp = level0_opponent_profiles(g, 0, ResponseKind::kBR);
    EXPECT_EQ(qbr(g, 0, opp, 1.7).probs, qbr(h, 0, opp, 1.7).probs);
    const auto pne = enumerate_pne(g);
    EXPECT_EQ(pne, enumerate_pne(h));
    if (!pne.empty()) { EXPECT_EQ(pne_qe_response(g, 0, pne, 1.7).probs, pne_qe_response(h, 0, pne, 1.7).probs); }
    EXPECT_EQ(best_response_profile(g, 0), best_response_profile(h, 0));
    EXPECT_EQ(maxmin_profile(g, 0), maxmin_profile(h, 0));
  }
}

TEST(Invariants, MonotoneInPrecision) {
  Rng rng(10);
  std::size_t checked = 0;
  for (int k = 0; k < 200; ++k) {
    const LevelGame g = random_level_game(rng, random_counts(rng, 3, 4), false);
    const auto best = argmax_set(optimistic_values(g, 0));
    if (best.size() != 1) continue;
    double prev = 0.0;
    for (double lambda : {0.1, 1.0, 10.0, 100.0}) {
      const double p = noisy_br(g, 0, lambda)[best[0]];
      EXPECT_GE(p, prev);
      prev = p;
    }
    ++checked;
  }
  EXPECT_GT(checked, 100u);
}

TEST(Invariants, QuantalLimits) {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const LevelGame g = random_level_game(rng, random_counts(rng, 3, 4), false);
    const auto flat = noisy_br(g, 0, 1e-9);
    expect_simplex(flat);
    for (double p : flat.probs) EXPECT_NEAR(p, 1.0 / flat.size(), 1e-6);
    const auto values = optimistic_values(g, 0);
    if (argmax_set(values).size() == 1) {
      const auto sharp = noisy_br(g, 0, 1e4);
      expect_simplex(sharp);
      // Payoffs in [-1, 1]: require a gap that makes 1e4 decisive.
      auto sorted = values;
      std::sort(sorted.rbegin(), sorted.rend());
      if (sorted.size() < 2 || sorted[0] - sorted[1] > 1e-3) { EXPECT_GE(sharp[argmax_set(values)[0]], 0.999); }
    }
  }
}

TEST(Invariants, OverflowSafe) {
  const LevelGame g = two_player({{1e3, 0.0}, {0.0, 0.0}}, {{0, 0}, {0, 0}});
  const auto r = noisy_br(g, 0, 200.0);
  EXPECT_TRUE(std::isfinite(r[0]) && std::isfinite(r[1]));
  expect_simplex(r);
}

TEST(Registry, TwentyFiveDistinctModels) {
  const auto models = model_registry();
  EXPECT_EQ(models.size(), 25u);
  std::set<std::string> keys;
  for (const auto& m : models) {
    keys.insert(m.key());
    EXPECT_EQ(parse_model(m.key()), m);
  }
  EXPECT_EQ(keys.size(), 25u);
  EXPECT_TRUE(keys.count("PNE-QE:BR:S1B"));
  EXPECT_TRUE(keys.count("QL0:MM:MM:S1"));
  EXPECT_TRUE(keys.count("QL1:MM:BR:S1G"));
  EXPECT_TRUE(keys.count("PNE-QE:S1"));
}

TEST(Registry, KeyParsing) {
  EXPECT_EQ(parse_model("QL0:BR:S1").key(), "QL0:BR:BR:S1");
  EXPECT_EQ(parse_model("PNE-QE:BR:S1").key(), "PNE-QE:S1");
  const auto m = parse_model("QL1:MM:BR:S1G");
  EXPECT_EQ(m.metamodel, Metamodel::kQL1);
  EXPECT_EQ(m.g1_response, ResponseKind::kMM);
  EXPECT_EQ(m.g2_response, ResponseKind::kBR);
  EXPECT_EQ(m.scheme, Scheme::kGauss);
  EXPECT_EQ(m.extra_parameters(), 1u);
  EXPECT_FALSE(find_model("QL2:BR:BR:S1").has_value());
  EXPECT_FALSE(find_model("QL0:BR:MM:S1").has_value());
  try {
    parse_model("nonsense");
    FAIL() << "unknown key accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownModel);
  }
}
