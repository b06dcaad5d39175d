#include "hertune/replay.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "hertune/error.hpp"

namespace hertune::replay {

namespace {

std::vector<double> concat(const std::vector<double>& a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Transition make_transition(const EpisodeStep& step, std::span<const double> goal,
                           const RewardFn& reward_fn) {
  Transition t;
  t.state_goal = concat(step.observation, goal);
  t.action = step.action;
  t.reward = reward_fn(step.next_achieved_goal, goal);
  t.next_state_goal = concat(step.next_observation, goal);
  t.achieved_goal = step.achieved_goal;
  t.next_achieved_goal = step.next_achieved_goal;
  return t;
}

}  // namespace

std::string to_string(HerStrategy s) { return s == HerStrategy::kFinal ? "final" : "future"; }

HerStrategy her_strategy_from_string(const std::string& name) {
  if (name == "final") return HerStrategy::kFinal;
  if (name == "future") return HerStrategy::kFuture;
  throw ContractViolation("unknown HER strategy '" + name + "' (expected final or future)");
}

void Episode::validate() const {
  require(!steps.empty(), "episode has no steps");
  const std::size_t goal_dim = desired_goal.size();
  require(goal_dim > 0, "episode desired_goal is empty");
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto& s = steps[t];
    require(s.achieved_goal.size() == goal_dim && s.next_achieved_goal.size() == goal_dim,
            fmt::format("achieved goal length mismatch at step {}", t));
    require(s.observation.size() == s.next_observation.size(),
            fmt::format("observation length mismatch at step {}", t));
    if (t + 1 < steps.size()) {
      const auto& next = steps[t + 1];
      require(s.next_observation == next.observation &&
                  s.next_achieved_goal == next.achieved_goal,
              fmt::format("episode chain broken between steps {} and {}", t, t + 1));
    }
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity > 0, "replay capacity must be positive");
  storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::add(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  require(i < size_, fmt::format("replay index {} out of range (size {})", i, size_));
  if (size_ < capacity_) return storage_[i];
  return storage_[(cursor_ + i) % capacity_];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, std::uint64_t seed) const {
  if (empty()) throw std::runtime_error("cannot sample from an empty replay buffer");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(storage_[pick(rng)]);
  return batch;
}

std::size_t store_episode(ReplayBuffer& buffer, const Episode& episode, int her_k,
                          HerStrategy strategy, const RewardFn& reward_fn, Rng& rng) {
  require(her_k >= 0, "her_k must be non-negative");
  episode.validate();
  const std::size_t horizon = episode.steps.size();
  std::size_t stored = 0;
  std::vector<std::size_t> later;
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto& step = episode.steps[t];
    buffer.add(make_transition(step, episode.desired_goal, reward_fn));
    ++stored;
    if (her_k == 0) continue;

    if (strategy == HerStrategy::kFinal) {
      buffer.add(make_transition(step, episode.steps.back().next_achieved_goal, reward_fn));
      ++stored;
      continue;
    }
    // Achieved goals after step t are the next_achieved goals of steps t..T-1.
    later.resize(horizon - t);
    std::iota(later.begin(), later.end(), t);
    const std::size_t draws = std::min<std::size_t>(static_cast<std::size_t>(her_k), later.size());
    for (std::size_t i = 0; i < draws; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, later.size() - 1);
      std::swap(later[i], later[pick(rng)]);
      const auto& goal = episode.steps[later[i]].next_achieved_goal;
      buffer.add(make_transition(step, goal, reward_fn));
      ++stored;
    }
  }
  return stored;
}

}  // namespace hertune::replay
