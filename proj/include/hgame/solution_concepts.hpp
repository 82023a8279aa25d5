#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "hgame/level_game.hpp"

namespace hgame {

enum class ResponseKind { kBR, kMM, kQBR, kPNE };

inline std::string_view to_string(ResponseKind k) {
  switch (k) {
    case ResponseKind::kBR: return "BR";
    case ResponseKind::kMM: return "MM";
    case ResponseKind::kQBR: return "QBR";
    case ResponseKind::kPNE: return "PNE";
  }
  return "?";
}

// Response rule for one level game. `level0` is the non-strategic rule that a level-1 (QBR)
// responder attributes to its opponents; it is ignored by the other kinds.
struct ResponseConcept {
  ResponseKind kind = ResponseKind::kBR;
  bool noisy = false;
  double lambda = 0.0;
  ResponseKind level0 = ResponseKind::kBR;

  bool non_strategic() const { return kind == ResponseKind::kBR || kind == ResponseKind::kMM; }
};

// Per-action utility of player i when opponents act to maximize (optimistic) or minimize
// (pessimistic) that same utility.
inline std::vector<double> optimistic_values(const LevelGame& g, std::size_t i) {
  std::vector<double> out(g.num_actions(i), -std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < out.size(); ++a) {
    g.for_each_with_action(i, a, [&](std::size_t idx) { out[a] = std::max(out[a], g.payoff(idx, i)); });
  }
  return out;
}

inline std::vector<double> pessimistic_values(const LevelGame& g, std::size_t i) {
  std::vector<double> out(g.num_actions(i), std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < out.size(); ++a) {
    g.for_each_with_action(i, a, [&](std::size_t idx) { out[a] = std::min(out[a], g.payoff(idx, i)); });
  }
  return out;
}

inline std::vector<std::size_t> argmax_set(std::span<const double> values) {
  const double best = *std::max_element(values.begin(), values.end());
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (values[a] == best) out.push_back(a);
  }
  return out;
}

// Shortfall of every action against the best one; zero for the maximizers.
inline std::vector<double> regrets_from_values(std::span<const double> values) {
  const double best = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  for (std::size_t a = 0; a < values.size(); ++a) out[a] = best - values[a];
  return out;
}

// Logit over values, computed after subtracting the max exponent.
inline MixedResponse logit_response(std::span<const double> values, double lambda) {
  const double best = *std::max_element(values.begin(), values.end());
  MixedResponse r;
  r.probs.resize(values.size());
  double total = 0.0;
  for (std::size_t a = 0; a < values.size(); ++a) {
    r.probs[a] = std::exp(lambda * (values[a] - best));
    total += r.probs[a];
  }
  for (double& p : r.probs) p /= total;
  return r;
}

// pi(a) proportional to exp(-lambda * regret(a)).
inline MixedResponse logit_from_regrets(std::span<const double> regrets, double lambda) {
  std::vector<double> values(regrets.size());
  for (std::size_t a = 0; a < regrets.size(); ++a) values[a] = -regrets[a];
  return logit_response(values, lambda);
}

// Every joint profile maximizing u_i over own and opponent actions.
inline std::vector<Profile> best_response_profile(const LevelGame& g, std::size_t i) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < g.num_profiles(); ++idx) best = std::max(best, g.payoff(idx, i));
  std::vector<Profile> out;
  for (std::size_t idx = 0; idx < g.num_profiles(); ++idx) {
    if (g.payoff(idx, i) == best) out.push_back(g.profile(idx));
  }
  return out;
}

// Maxmin actions of i, each paired with every opponent profile attaining its minimum.
inline std::vector<Profile> maxmin_profile(const LevelGame& g, std::size_t i) {
  const std::vector<double> worst = pessimistic_values(g, i);
  std::vector<Profile> out;
  for (std::size_t a : argmax_set(worst)) {
    g.for_each_with_action(i, a, [&](std::size_t idx) {
      if (g.payoff(idx, i) == worst[a]) out.push_back(g.profile(idx));
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline MixedResponse noisy_br(const LevelGame& g, std::size_t i, double lambda) {
  return logit_response(optimistic_values(g, i), lambda);
}

inline MixedResponse noisy_mm(const LevelGame& g, std::size_t i, double lambda) {
  return logit_response(pessimistic_values(g, i), lambda);
}

// Pure non-strategic response actions of player j under BR or MM.
inline std::vector<std::size_t> level0_actions(const LevelGame& g, std::size_t j, ResponseKind kind) {
  if (kind == ResponseKind::kMM) return argmax_set(pessimistic_values(g, j));
  if (kind == ResponseKind::kBR) return argmax_set(optimistic_values(g, j));
  throw Error(ErrorCode::kInvalidArgument, "level-0 responses are BR or MM");
}

// Opponent pure profiles believed by a level-1 responder i: the product of each opponent's
// level-0 solution set. Player i's own slot is left at 0.
inline std::vector<Profile> level0_opponent_profiles(const LevelGame& g, std::size_t i, ResponseKind kind) {
  std::vector<Profile> out{Profile(g.num_players(), 0)};
  for (std::size_t j = 0; j < g.num_players(); ++j) {
    if (j == i) continue;
    const std::vector<std::size_t> actions = level0_actions(g, j, kind);
    std::vector<Profile> next;
    next.reserve(out.size() * actions.size());
    for (const Profile& p : out) {
      for (std::size_t a : actions) {
        Profile q = p;
        q[j] = a;
        next.push_back(std::move(q));
      }
    }
    out = std::move(next);
  }
  return out;
}

// Utility of each of i's actions averaged uniformly over the given opponent profiles.
inline std::vector<double> response_values(const LevelGame& g, std::size_t i, std::span<const Profile> opponents) {
  if (opponents.empty()) throw Error(ErrorCode::kInvalidArgument, "no opponent profile supplied");
  std::vector<double> out(g.num_actions(i), 0.0);
  for (const Profile& p : opponents) {
    const std::size_t base = g.index(p);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] += g.payoff(g.with_action(base, i, a), i);
  }
  for (double& v : out) v /= static_cast<double>(opponents.size());
  return out;
}

// Differences are taken on the summed utilities before averaging, so a constant shift of u_i
// cancels exactly whenever the sums are exact.
inline MixedResponse qbr(const LevelGame& g, std::size_t i, std::span<const Profile> opponents, double lambda) {
  if (opponents.empty()) throw Error(ErrorCode::kInvalidArgument, "no opponent profile supplied");
  std::vector<double> sums(g.num_actions(i), 0.0);
  for (const Profile& p : opponents) {
    const std::size_t base = g.index(p);
    for (std::size_t a = 0; a < sums.size(); ++a) sums[a] += g.payoff(g.with_action(base, i, a), i);
  }
  const double best = *std::max_element(sums.begin(), sums.end());
  for (double& v : sums) v = (v - best) / static_cast<double>(opponents.size());
  return logit_response(sums, lambda);
}

inline MixedResponse mix(double alpha, const MixedResponse& level0, const MixedResponse& level1) {
  MixedResponse r;
  r.probs.resize(level0.size());
  for (std::size_t a = 0; a < r.probs.size(); ++a) {
    r.probs[a] = alpha * level0.probs[a] + (1.0 - alpha) * level1.probs[a];
  }
  return r;
}

// alpha * level-0 noisy response + (1 - alpha) * QBR to opponents' level-0 pure responses.
inline MixedResponse ql1_response(const LevelGame& g, std::size_t i, ResponseKind level0, double alpha,
                                  double lambda0, double lambda1) {
  if (alpha < 0.0 || alpha > 1.0) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  const MixedResponse l0 = level0 == ResponseKind::kMM ? noisy_mm(g, i, lambda0) : noisy_br(g, i, lambda0);
  const std::vector<Profile> opp = level0_opponent_profiles(g, i, level0);
  return mix(alpha, l0, qbr(g, i, opp, lambda1));
}

// Profiles where no player gains by a unilateral deviation (ties allowed).
inline std::vector<Profile> enumerate_pne(const LevelGame& g) {
  std::vector<Profile> out;
  for (std::size_t idx = 0; idx < g.num_profiles(); ++idx) {
    bool stable = true;
    for (std::size_t i = 0; i < g.num_players() && stable; ++i) {
      const double current = g.payoff(idx, i);
      for (std::size_t a = 0; a < g.num_actions(i); ++a) {
        if (g.payoff(g.with_action(idx, i, a), i) > current) {
          stable = false;
          break;
        }
      }
    }
    if (stable) out.push_back(g.profile(idx));
  }
  return out;
}

// Regret of each of i's actions against the closest equilibrium: min over equilibria of
// u_i(eq) - u_i(a, eq_{-i}).
inline std::vector<double> pne_regrets(const LevelGame& g, std::size_t i, std::span<const Profile> pne) {
  if (pne.empty()) throw Error(ErrorCode::kEmptyEquilibriumSet, "no pure-strategy equilibrium");
  std::vector<double> out(g.num_actions(i), std::numeric_limits<double>::infinity());
  for (const Profile& eq : pne) {
    const std::size_t base = g.index(eq);
    const double star = g.payoff(base, i);
    for (std::size_t a = 0; a < out.size(); ++a) {
      out[a] = std::min(out[a], star - g.payoff(g.with_action(base, i, a), i));
    }
  }
  return out;
}

// Logit over equilibrium regrets.
inline MixedResponse pne_qe_response(const LevelGame& g, std::size_t i, std::span<const Profile> pne, double lambda) {
  return logit_from_regrets(pne_regrets(g, i, pne), lambda);
}

}  // namespace hgame
