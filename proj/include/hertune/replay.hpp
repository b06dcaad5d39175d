#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hertune/seeding.hpp"

namespace hertune::replay {

// One stored experience. state_goal = observation || goal and
// next_state_goal = next observation || the same goal; goals and
// observations are in world units.
struct Transition {
  std::vector<double> state_goal;
  std::vector<double> action;
  double reward = -1.0;
  std::vector<double> next_state_goal;
  std::vector<double> achieved_goal;
  std::vector<double> next_achieved_goal;

  // Trailing goal_dim entries of state_goal.
  std::span<const double> goal(std::size_t goal_dim) const {
    return std::span<const double>(state_goal).last(goal_dim);
  }
  bool operator==(const Transition&) const = default;
};

struct EpisodeStep {
  std::vector<double> observation;
  std::vector<double> achieved_goal;
  std::vector<double> action;
  std::vector<double> next_observation;
  std::vector<double> next_achieved_goal;
};

struct Episode {
  std::vector<EpisodeStep> steps;
  std::vector<double> desired_goal;

  // Throws ContractViolation unless every step chains into the next and all
  // goals share one length.
  void validate() const;
};

enum class HerStrategy { kFinal, kFuture };

std::string to_string(HerStrategy s);
HerStrategy her_strategy_from_string(const std::string& name);

using RewardFn = std::function<double(std::span<const double> achieved,
                                      std::span<const double> desired)>;

// Fixed-capacity ring; once full, each insertion overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }

  // Index 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

  // batch_size draws, uniform with replacement. Throws std::runtime_error on
  // an empty buffer.
  std::vector<Transition> sample(std::size_t batch_size, std::uint64_t seed) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
};

// Stores every step with the episode's own goal, then her_k relabelled copies
// per step (final: one copy using the last achieved goal; future: up to her_k
// distinct later achieved goals). Returns the number of transitions stored.
std::size_t store_episode(ReplayBuffer& buffer, const Episode& episode, int her_k,
                          HerStrategy strategy, const RewardFn& reward_fn, Rng& rng);

}  // namespace hertune::replay
