#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hertune/envs.hpp"
#include "hertune/nn.hpp"
#include "hertune/replay.hpp"
#include "hertune/seeding.hpp"

namespace hertune::agent {

// The six tunable learning parameters. Every field lies in [0, 1].
struct HyperParams {
  double gamma = 0.98;         // discount
  double tau = 0.95;           // polyak coefficient
  double alpha_critic = 0.001; // critic learning rate
  double alpha_actor = 0.001;  // actor learning rate
  double epsilon = 0.3;        // probability of a uniformly random action
  double eta = 0.2;            // exploration noise std, fraction of action bound

  static HyperParams original() { return {}; }
  // Values reported as GA-optimal for the manipulation tasks.
  static HyperParams tuned() { return {0.88, 0.184, 0.001, 0.001, 0.055, 0.774}; }

  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

// How tau blends main parameters into the targets.
enum class PolyakConvention {
  kBlendMain,     // target <- tau * main + (1 - tau) * target
  kRetainTarget,  // target <- (1 - tau) * main + tau * target
};

std::string to_string(PolyakConvention c);
PolyakConvention polyak_convention_from_string(const std::string& name);

struct TrainConfig {
  int cycles_per_epoch = 10;
  int episodes_per_cycle = 2;
  int optimize_steps_per_cycle = 40;
  int batch_size = 128;
  int eval_episodes = 20;
  int max_epochs = 50;
  double success_threshold = 0.85;
  bool target_clip = true;

  int her_k = 4;
  replay::HerStrategy her_strategy = replay::HerStrategy::kFuture;
  std::size_t buffer_capacity = 100000;
  std::vector<int> hidden_layers = {64, 64};
  PolyakConvention polyak_convention = PolyakConvention::kBlendMain;

  void validate() const;
};

struct Losses {
  double critic = 0.0;
  double actor = 0.0;
};

class DdpgAgent {
 public:
  DdpgAgent(const envs::EnvSpec& spec, const HyperParams& params, const TrainConfig& config,
            std::uint64_t init_seed);

  // observation_goal is observation || desired goal in world units.
  std::vector<double> act(std::span<const double> observation_goal, bool explore, Rng& rng) const;

  // Bootstrapped critic targets r + gamma * Q'(s', mu'(s')), one per transition.
  Eigen::VectorXd critic_target(std::span<const replay::Transition> batch) const;

  // One Adam step for the critic (squared error to the targets) and one for
  // the actor (-mean Q(s, mu(s)) through the unchanged critic). Returns the
  // losses measured before either step. Throws NumericalError on a
  // non-finite loss.
  Losses train_step(std::span<const replay::Transition> batch);

  void update_targets();

  const HyperParams& params() const { return params_; }
  const envs::EnvSpec& env_spec() const { return spec_; }
  PolyakConvention polyak_convention() const { return polyak_; }

  nn::Mlp& actor() { return actor_; }
  nn::Mlp& critic() { return critic_; }
  nn::Mlp& target_actor() { return target_actor_; }
  nn::Mlp& target_critic() { return target_critic_; }
  const nn::Mlp& actor() const { return actor_; }
  const nn::Mlp& critic() const { return critic_; }
  const nn::Mlp& target_actor() const { return target_actor_; }
  const nn::Mlp& target_critic() const { return target_critic_; }

  // Network-ready [-1, 1] scaling of observation || goal columns.
  Eigen::MatrixXd normalize_inputs(std::span<const replay::Transition> batch, bool next) const;
  Eigen::VectorXd normalize(std::span<const double> observation_goal) const;

 private:
  envs::EnvSpec spec_;
  HyperParams params_;
  bool target_clip_;
  PolyakConvention polyak_;
  nn::Mlp actor_, critic_, target_actor_, target_critic_;
  Eigen::VectorXd input_offset_, input_scale_;
};

std::vector<double> concat(std::span<const double> a, std::span<const double> b);

// Rolls out one full-horizon episode with exploration.
replay::Episode collect_episode(const DdpgAgent& agent, envs::Env& env, std::uint64_t reset_seed,
                                Rng& rng);

// Greedy rollouts; fraction whose final state satisfies the goal. Episode i
// resets with derive_seed(seed, {i}).
double evaluate(const DdpgAgent& agent, envs::Env& env, int n_episodes, std::uint64_t seed);

// Collect, store, optimise and finally evaluate with eval_seed.
double train_epoch(DdpgAgent& agent, envs::Env& env, replay::ReplayBuffer& buffer,
                   const TrainConfig& config, Rng& rng, std::uint64_t eval_seed);

// Owns everything one training run needs; all randomness derives from the
// run seed via the stream tags in seeding.hpp.
class TrainingSession {
 public:
  TrainingSession(const std::string& env_name, const envs::EnvOverrides& overrides,
                  const HyperParams& params, const TrainConfig& config, std::uint64_t seed);

  // Runs one epoch and returns its evaluation success rate.
  double run_epoch();
  int epochs_completed() const { return epochs_; }

  DdpgAgent& agent() { return agent_; }
  envs::Env& env() { return *env_; }
  const replay::ReplayBuffer& buffer() const { return buffer_; }

 private:
  TrainConfig config_;
  std::uint64_t seed_;
  std::unique_ptr<envs::Env> env_;
  DdpgAgent agent_;
  replay::ReplayBuffer buffer_;
  Rng rng_;
  int epochs_ = 0;
};

struct TrainingOutcome {
  std::vector<double> success_rates;  // index e holds epoch e + 1
  std::optional<int> epochs_to_threshold;
  double best_success = 0.0;
  bool failed = false;
  std::string failure_reason;
};

using EpochCallback = std::function<void(int epoch, double success_rate)>;

// Trains for up to config.max_epochs. A NumericalError ends the run early
// and is reported through the outcome instead of propagating.
TrainingOutcome train(TrainingSession& session, const TrainConfig& config, bool stop_at_threshold,
                      const EpochCallback& on_epoch = {});

}  // namespace hertune::agent
