#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "hgame/types.hpp"

namespace hgame {

// One action index per player.
using Profile = std::vector<std::size_t>;

// Finite simultaneous-move game. Players are addressed by position 0..N-1; participants() maps
// positions back to agent ids. Profiles are enumerated in mixed-radix order with player 0 as the
// most significant digit.
class LevelGame {
 public:
  LevelGame() = default;

  LevelGame(std::vector<AgentId> participants, std::vector<std::size_t> action_counts)
      : participants_(std::move(participants)), counts_(std::move(action_counts)) {
    if (participants_.size() != counts_.size() || counts_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "level game needs one action count per participant");
    }
    strides_.assign(counts_.size(), 1);
    std::size_t total = 1;
    for (std::size_t i = counts_.size(); i-- > 0;) {
      if (counts_[i] == 0) throw Error(ErrorCode::kEmptyActionSet, "player without actions");
      strides_[i] = total;
      total *= counts_[i];
    }
    profiles_ = total;
    payoffs_.assign(total * counts_.size(), 0.0);
  }

  // Copies the counts: argument evaluation order would otherwise let a move empty them first.
  explicit LevelGame(const std::vector<std::size_t>& action_counts)
      : LevelGame(default_ids(action_counts.size()), action_counts) {}

  std::size_t num_players() const { return counts_.size(); }
  std::size_t num_actions(std::size_t player) const { return counts_[player]; }
  std::span<const std::size_t> action_counts() const { return counts_; }
  std::size_t num_profiles() const { return profiles_; }
  std::span<const AgentId> participants() const { return participants_; }

  std::size_t index(std::span<const std::size_t> profile) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) idx += profile[i] * strides_[i];
    return idx;
  }

  Profile profile(std::size_t index) const {
    Profile p(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      p[i] = (index / strides_[i]) % counts_[i];
    }
    return p;
  }

  // Index of the profile obtained from `index` by replacing player i's action.
  std::size_t with_action(std::size_t index, std::size_t player, std::size_t action) const {
    const std::size_t current = (index / strides_[player]) % counts_[player];
    return index - current * strides_[player] + action * strides_[player];
  }

  std::size_t action_of(std::size_t index, std::size_t player) const {
    return (index / strides_[player]) % counts_[player];
  }

  double payoff(std::size_t profile_index, std::size_t player) const {
    return payoffs_[profile_index * counts_.size() + player];
  }
  double payoff(std::span<const std::size_t> profile, std::size_t player) const {
    return payoff(index(profile), player);
  }
  void set_payoff(std::size_t profile_index, std::size_t player, double value) {
    payoffs_[profile_index * counts_.size() + player] = value;
  }

  // Calls fn(profile_index) for every profile in which player i plays action a.
  template <typename Fn>
  void for_each_with_action(std::size_t player, std::size_t action, Fn&& fn) const {
    // Enumerate the opponents' sub-profiles by stepping over all indices with the player's digit fixed.
    const std::size_t stride = strides_[player];
    const std::size_t block = stride * counts_[player];
    for (std::size_t hi = 0; hi < profiles_; hi += block) {
      const std::size_t base = hi + action * stride;
      for (std::size_t lo = 0; lo < stride; ++lo) fn(base + lo);
    }
  }

 private:
  static std::vector<AgentId> default_ids(std::size_t n) {
    std::vector<AgentId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
  }

  std::vector<AgentId> participants_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> strides_;
  std::size_t profiles_ = 0;
  std::vector<double> payoffs_;
};

// Probability over one player's actions.
struct MixedResponse {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t a) const { return probs[a]; }
};

}  // namespace hgame
