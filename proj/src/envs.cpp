#include "hertune/envs.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hertune/error.hpp"

namespace hertune::envs {

namespace {

constexpr int kMaxGoalResamples = 10000;

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Object-minus-agent offsets are reported like a short-range sensor,
// saturating at kOffsetRange, so contact-scale differences stay visible
// after input scaling.
constexpr double kOffsetRange = 0.2;

double offset_reading(double d) { return clamp(d, -kOffsetRange, kOffsetRange); }

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

EnvSpec apply_overrides(EnvSpec spec, const EnvOverrides& o) {
  if (o.success_distance) spec.success_distance = *o.success_distance;
  if (o.horizon) spec.horizon = *o.horizon;
  spec.validate();
  return spec;
}

bool strictly_inside(const double point[2], const double centre[2], double half) {
  return std::abs(point[0] - centre[0]) < half && std::abs(point[1] - centre[1]) < half;
}

// Moves the agent by the clipped command and reports the realised displacement.
void move_agent(double agent[2], std::span<const double> action, double bound, double x_max,
                double displacement[2]) {
  const double target_x = clamp(agent[0] + kMaxStep * action[0] / bound, 0.0, x_max);
  const double target_y = clamp(agent[1] + kMaxStep * action[1] / bound, 0.0, 1.0);
  displacement[0] = target_x - agent[0];
  displacement[1] = target_y - agent[1];
  agent[0] = target_x;
  agent[1] = target_y;
}

// True when the agent's move ends inside the object while heading toward its
// centre (measured from the pre-move position).
bool makes_contact(const double before[2], const double after[2], const double displacement[2],
                   const double object[2], double half) {
  const double toward = displacement[0] * (object[0] - before[0]) +
                        displacement[1] * (object[1] - before[1]);
  return toward > 0.0 && strictly_inside(after, object, half);
}

}  // namespace

void EnvSpec::validate() const {
  require(observation_dim > 0 && goal_dim > 0 && action_dim > 0, "env dims must be positive");
  require(action_bound > 0.0, "action_bound must be positive");
  require(success_distance > 0.0, "success_distance must be positive");
  require(horizon >= 1, "horizon must be at least 1");
  require(static_cast<int>(observation_low.size()) == observation_dim &&
              static_cast<int>(observation_high.size()) == observation_dim,
          "observation bounds must match observation_dim");
  require(static_cast<int>(goal_low.size()) == goal_dim &&
              static_cast<int>(goal_high.size()) == goal_dim,
          "goal bounds must match goal_dim");
}

double compute_reward(std::span<const double> achieved, std::span<const double> desired,
                      const EnvSpec& spec) {
  require(achieved.size() == desired.size(),
          fmt::format("goal length mismatch: achieved {} vs desired {}", achieved.size(),
                      desired.size()));
  double sq = 0.0;
  for (std::size_t i = 0; i < achieved.size(); ++i) {
    const double d = achieved[i] - desired[i];
    sq += d * d;
  }
  return std::sqrt(sq) < spec.success_distance ? 0.0 : -1.0;
}

bool is_success(std::span<const double> achieved, std::span<const double> desired,
                const EnvSpec& spec) {
  return compute_reward(achieved, desired, spec) == 0.0;
}

Env::Env(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

GoalObservation Env::reset(std::uint64_t seed) {
  Rng rng(seed);
  sample_initial_state(rng);
  sample_goal(rng);
  for (int i = 0; i < kMaxGoalResamples; ++i) {
    const auto obs = observe();
    if (!is_success(obs.achieved_goal, obs.desired_goal, spec_)) break;
    sample_goal(rng);
  }
  steps_ = 0;
  started_ = true;
  return observe();
}

StepResult Env::step(std::span<const double> action) {
  require(started_, "step called before reset");
  require(steps_ < spec_.horizon, "step called on a finished episode");
  require(static_cast<int>(action.size()) == spec_.action_dim,
          fmt::format("action length {} does not match action_dim {}", action.size(),
                      spec_.action_dim));
  std::vector<double> clipped(action.begin(), action.end());
  for (auto& a : clipped) {
    // NaN commands are treated as no motion.
    a = std::isnan(a) ? 0.0 : clamp(a, -spec_.action_bound, spec_.action_bound);
  }
  advance(clipped);
  ++steps_;
  StepResult result;
  result.observation = observe();
  result.reward =
      compute_reward(result.observation.achieved_goal, result.observation.desired_goal, spec_);
  result.done = steps_ == spec_.horizon;
  return result;
}

// ---------------------------------------------------------------- reach

namespace {

EnvSpec reach_spec() {
  EnvSpec s;
  s.observation_dim = 2;
  s.goal_dim = 2;
  s.action_dim = 2;
  s.observation_low = {0.0, 0.0};
  s.observation_high = {1.0, 1.0};
  s.goal_low = {0.0, 0.0};
  s.goal_high = {1.0, 1.0};
  return s;
}

}  // namespace

PointReach::PointReach(const EnvOverrides& overrides)
    : Env(apply_overrides(reach_spec(), overrides)) {}

void PointReach::set_state(double x, double y, double goal_x, double goal_y) {
  reset(0);
  agent_[0] = x;
  agent_[1] = y;
  goal_[0] = goal_x;
  goal_[1] = goal_y;
}

void PointReach::sample_initial_state(Rng& rng) {
  agent_[0] = uniform(rng, 0.0, 1.0);
  agent_[1] = uniform(rng, 0.0, 1.0);
}

void PointReach::sample_goal(Rng& rng) {
  goal_[0] = uniform(rng, 0.0, 1.0);
  goal_[1] = uniform(rng, 0.0, 1.0);
}

void PointReach::advance(std::span<const double> action) {
  double moved[2];
  move_agent(agent_, action, spec_.action_bound, 1.0, moved);
}

GoalObservation PointReach::observe() const {
  return {{agent_[0], agent_[1]}, {agent_[0], agent_[1]}, {goal_[0], goal_[1]}};
}

// ---------------------------------------------------------------- push

namespace {

EnvSpec push_spec() {
  EnvSpec s;
  s.observation_dim = 6;
  s.goal_dim = 2;
  s.action_dim = 2;
  s.observation_low = {0.0, 0.0, 0.0, 0.0, -kOffsetRange, -kOffsetRange};
  s.observation_high = {1.0, 1.0, 1.0, 1.0, kOffsetRange, kOffsetRange};
  s.goal_low = {0.0, 0.0};
  s.goal_high = {1.0, 1.0};
  return s;
}

constexpr double kPushGoalOffset = 0.25;
constexpr double kPushAgentOffset = 0.2;

}  // namespace

PlanarPush::PlanarPush(const EnvOverrides& overrides)
    : Env(apply_overrides(push_spec(), overrides)) {}

void PlanarPush::set_state(double agent_x, double agent_y, double object_x, double object_y,
                           double goal_x, double goal_y) {
  reset(0);
  agent_[0] = agent_x;
  agent_[1] = agent_y;
  object_[0] = object_x;
  object_[1] = object_y;
  goal_[0] = goal_x;
  goal_[1] = goal_y;
}

void PlanarPush::sample_initial_state(Rng& rng) {
  object_[0] = uniform(rng, 0.25, 0.75);
  object_[1] = uniform(rng, 0.25, 0.75);
  do {
    agent_[0] = object_[0] + uniform(rng, -kPushAgentOffset, kPushAgentOffset);
    agent_[1] = object_[1] + uniform(rng, -kPushAgentOffset, kPushAgentOffset);
  } while (strictly_inside(agent_, object_, kHalfSize));
}

void PlanarPush::sample_goal(Rng& rng) {
  for (int axis = 0; axis < 2; ++axis) {
    goal_[axis] = clamp(object_[axis] + uniform(rng, -kPushGoalOffset, kPushGoalOffset),
                        kHalfSize, 1.0 - kHalfSize);
  }
}

void PlanarPush::advance(std::span<const double> action) {
  const double before[2] = {agent_[0], agent_[1]};
  double moved[2];
  move_agent(agent_, action, spec_.action_bound, 1.0, moved);
  if (makes_contact(before, agent_, moved, object_, kHalfSize)) {
    object_[0] = clamp(object_[0] + moved[0], kHalfSize, 1.0 - kHalfSize);
    object_[1] = clamp(object_[1] + moved[1], kHalfSize, 1.0 - kHalfSize);
  }
}

GoalObservation PlanarPush::observe() const {
  return {{agent_[0], agent_[1], object_[0], object_[1], offset_reading(object_[0] - agent_[0]),
           offset_reading(object_[1] - agent_[1])},
          {object_[0], object_[1]},
          {goal_[0], goal_[1]}};
}

// ---------------------------------------------------------------- slide

namespace {

EnvSpec slide_spec() {
  EnvSpec s;
  s.observation_dim = 8;
  s.goal_dim = 2;
  s.action_dim = 2;
  s.observation_low = {0.0, 0.0, 0.0, 0.0, -kMaxStep, -kMaxStep, -kOffsetRange, -kOffsetRange};
  s.observation_high = {PlanarSlide::kStripLimit, 1.0, 1.0, 1.0, kMaxStep, kMaxStep,
                        kOffsetRange, kOffsetRange};
  s.goal_low = {0.0, 0.0};
  s.goal_high = {1.0, 1.0};
  return s;
}

}  // namespace

PlanarSlide::PlanarSlide(const EnvOverrides& overrides)
    : Env(apply_overrides(slide_spec(), overrides)) {}

void PlanarSlide::set_state(double agent_x, double agent_y, double object_x, double object_y,
                            double goal_x, double goal_y) {
  reset(0);
  agent_[0] = agent_x;
  agent_[1] = agent_y;
  object_[0] = object_x;
  object_[1] = object_y;
  velocity_[0] = velocity_[1] = 0.0;
  goal_[0] = goal_x;
  goal_[1] = goal_y;
}

void PlanarSlide::sample_initial_state(Rng& rng) {
  agent_[0] = uniform(rng, 0.0, 0.15);
  agent_[1] = uniform(rng, 0.2, 0.8);
  object_[0] = uniform(rng, 0.2, 0.3);
  object_[1] = uniform(rng, 0.3, 0.7);
  velocity_[0] = velocity_[1] = 0.0;
}

void PlanarSlide::sample_goal(Rng& rng) {
  goal_[0] = uniform(rng, 0.55, 0.9);
  goal_[1] = uniform(rng, 0.2, 0.8);
}

void PlanarSlide::advance(std::span<const double> action) {
  const double before[2] = {agent_[0], agent_[1]};
  double moved[2];
  move_agent(agent_, action, spec_.action_bound, kStripLimit, moved);
  if (makes_contact(before, agent_, moved, object_, kHalfSize)) {
    velocity_[0] = moved[0];
    velocity_[1] = moved[1];
  }
  for (int axis = 0; axis < 2; ++axis) {
    object_[axis] += velocity_[axis];
    velocity_[axis] *= kFriction;
    if (object_[axis] < kHalfSize || object_[axis] > 1.0 - kHalfSize) {
      object_[axis] = clamp(object_[axis], kHalfSize, 1.0 - kHalfSize);
      velocity_[axis] = 0.0;
    }
  }
}

GoalObservation PlanarSlide::observe() const {
  return {{agent_[0], agent_[1], object_[0], object_[1], velocity_[0], velocity_[1],
           offset_reading(object_[0] - agent_[0]), offset_reading(object_[1] - agent_[1])},
          {object_[0], object_[1]},
          {goal_[0], goal_[1]}};
}

// ---------------------------------------------------------------- registry

std::vector<std::string> registered_envs() { return {"reach", "push", "slide"}; }

bool is_registered(std::string_view name) {
  return name == "reach" || name == "push" || name == "slide";
}

std::unique_ptr<Env> make_env(std::string_view name, const EnvOverrides& overrides) {
  if (name == "reach") return std::make_unique<PointReach>(overrides);
  if (name == "push") return std::make_unique<PlanarPush>(overrides);
  if (name == "slide") return std::make_unique<PlanarSlide>(overrides);
  throw ContractViolation(fmt::format("unknown environment '{}' (expected reach, push or slide)",
                                      name));
}

}  // namespace hertune::envs
