#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hertune/seeding.hpp"

namespace hertune::envs {

struct GoalObservation {
  std::vector<double> observation;
  std::vector<double> achieved_goal;
  std::vector<double> desired_goal;
};

struct EnvSpec {
  int observation_dim = 0;
  int goal_dim = 0;
  int action_dim = 0;
  double action_bound = 1.0;
  double success_distance = 0.05;
  int horizon = 50;
  // Per-component bounds used to scale observations and goals to [-1, 1]
  // before they reach a network.
  std::vector<double> observation_low, observation_high;
  std::vector<double> goal_low, goal_high;

  void validate() const;
};

// Sparse reward: 0 when the goals are strictly closer than success_distance,
// -1 otherwise.
double compute_reward(std::span<const double> achieved, std::span<const double> desired,
                      const EnvSpec& spec);
bool is_success(std::span<const double> achieved, std::span<const double> desired,
                const EnvSpec& spec);

struct StepResult {
  GoalObservation observation;
  double reward = -1.0;
  bool done = false;
};

// Optional constant overrides, applied on construction.
struct EnvOverrides {
  std::optional<double> success_distance;
  std::optional<int> horizon;
};

class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  virtual std::string name() const = 0;

  GoalObservation reset(std::uint64_t seed);
  // Actions are clipped to [-action_bound, action_bound] per coordinate.
  StepResult step(std::span<const double> action);

  int steps_taken() const { return steps_; }
  bool episode_over() const { return steps_ >= spec_.horizon; }

  virtual std::unique_ptr<Env> clone() const = 0;

 protected:
  explicit Env(EnvSpec spec);

  virtual void sample_initial_state(Rng& rng) = 0;
  virtual void sample_goal(Rng& rng) = 0;
  virtual void advance(std::span<const double> clipped_action) = 0;
  virtual GoalObservation observe() const = 0;

  EnvSpec spec_;

 private:
  int steps_ = 0;
  bool started_ = false;
};

// Workspace is the unit square. Every agent step moves at most
// kMaxStep world units per coordinate.
inline constexpr double kMaxStep = 0.05;

// 2-D point agent driven by velocity commands; goal is a target point.
class PointReach final : public Env {
 public:
  explicit PointReach(const EnvOverrides& overrides = {});
  std::string name() const override { return "reach"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointReach>(*this); }

  void set_state(double x, double y, double goal_x, double goal_y);

 protected:
  void sample_initial_state(Rng& rng) override;
  void sample_goal(Rng& rng) override;
  void advance(std::span<const double> action) override;
  GoalObservation observe() const override;

 private:
  double agent_[2] = {0.5, 0.5};
  double goal_[2] = {0.5, 0.5};
};

// Point agent plus a square object. An agent step that ends strictly inside
// the object while heading toward its centre translates the object by the
// agent's displacement. The goal is a target object position.
// Observation: agent xy, object xy, object - agent clipped to +-0.2.
class PlanarPush final : public Env {
 public:
  static constexpr double kHalfSize = 0.05;

  explicit PlanarPush(const EnvOverrides& overrides = {});
  std::string name() const override { return "push"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PlanarPush>(*this); }

  void set_state(double agent_x, double agent_y, double object_x, double object_y,
                 double goal_x, double goal_y);

 protected:
  void sample_initial_state(Rng& rng) override;
  void sample_goal(Rng& rng) override;
  void advance(std::span<const double> action) override;
  GoalObservation observe() const override;

 private:
  double agent_[2] = {0.2, 0.5};
  double object_[2] = {0.5, 0.5};
  double goal_[2] = {0.7, 0.5};
};

// Agent confined to the strip x <= kStripLimit. Contact gives the object a
// velocity equal to the agent's displacement; the object then slides with
// velocity decaying by kFriction per step. Goals lie beyond the strip.
// Observation: agent xy, object xy, object velocity, object - agent clipped
// to +-0.2.
class PlanarSlide final : public Env {
 public:
  static constexpr double kHalfSize = 0.05;
  static constexpr double kStripLimit = 0.4;
  static constexpr double kFriction = 0.95;

  explicit PlanarSlide(const EnvOverrides& overrides = {});
  std::string name() const override { return "slide"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PlanarSlide>(*this); }

  void set_state(double agent_x, double agent_y, double object_x, double object_y,
                 double goal_x, double goal_y);
  double object_velocity(int axis) const { return velocity_[axis]; }

 protected:
  void sample_initial_state(Rng& rng) override;
  void sample_goal(Rng& rng) override;
  void advance(std::span<const double> action) override;
  GoalObservation observe() const override;

 private:
  double agent_[2] = {0.1, 0.5};
  double object_[2] = {0.25, 0.5};
  double velocity_[2] = {0.0, 0.0};
  double goal_[2] = {0.7, 0.5};
};

std::vector<std::string> registered_envs();
bool is_registered(std::string_view name);
std::unique_ptr<Env> make_env(std::string_view name, const EnvOverrides& overrides = {});

}  // namespace hertune::envs
