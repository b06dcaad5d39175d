#include "hertune/agent.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hertune/error.hpp"

namespace hertune::agent {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void HyperParams::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(in_unit(gamma) && in_unit(tau) && in_unit(alpha_critic) && in_unit(alpha_actor) &&
              in_unit(epsilon) && in_unit(eta),
          fmt::format("hyperparameters must lie in [0, 1] (gamma={}, tau={}, alpha_critic={}, "
                      "alpha_actor={}, epsilon={}, eta={})",
                      gamma, tau, alpha_critic, alpha_actor, epsilon, eta));
}

std::string to_string(PolyakConvention c) {
  return c == PolyakConvention::kBlendMain ? "blend_main" : "retain_target";
}

PolyakConvention polyak_convention_from_string(const std::string& name) {
  if (name == "blend_main") return PolyakConvention::kBlendMain;
  if (name == "retain_target") return PolyakConvention::kRetainTarget;
  throw ContractViolation("unknown polyak convention '" + name +
                          "' (expected blend_main or retain_target)");
}

void TrainConfig::validate() const {
  require(cycles_per_epoch > 0 && episodes_per_cycle > 0 && batch_size > 0 &&
              eval_episodes > 0,
          "cycles_per_epoch, episodes_per_cycle, batch_size and eval_episodes must be positive");
  require(optimize_steps_per_cycle >= 0, "optimize_steps_per_cycle must be non-negative");
  require(max_epochs >= 0, "max_epochs must be non-negative");
  require(success_threshold > 0.0 && success_threshold <= 1.0,
          "success_threshold must lie in (0, 1]");
  require(her_k >= 0, "her_k must be non-negative");
  require(buffer_capacity > 0, "buffer_capacity must be positive");
  for (int h : hidden_layers) require(h > 0, "hidden layer widths must be positive");
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

namespace {

std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void blend(nn::Mlp& target, const nn::Mlp& main, double main_weight) {
  const double keep = 1.0 - main_weight;
  for (std::size_t i = 0; i < target.num_layers(); ++i) {
    target.weights[i] = main_weight * main.weights[i].array() + keep * target.weights[i].array();
    target.biases[i] = main_weight * main.biases[i].array() + keep * target.biases[i].array();
  }
}

}  // namespace

DdpgAgent::DdpgAgent(const envs::EnvSpec& spec, const HyperParams& params,
                     const TrainConfig& config, std::uint64_t init_seed)
    : spec_(spec),
      params_(params),
      target_clip_(config.target_clip),
      polyak_(config.polyak_convention) {
  spec_.validate();
  params_.validate();
  const int state_goal = spec_.observation_dim + spec_.goal_dim;
  actor_ = nn::Mlp(widths(state_goal, config.hidden_layers, spec_.action_dim),
                   nn::Activation::kRelu, nn::Activation::kTanh);
  critic_ = nn::Mlp(widths(state_goal + spec_.action_dim, config.hidden_layers, 1),
                    nn::Activation::kRelu, nn::Activation::kIdentity);
  nn::initialize_uniform(actor_, derive_seed(init_seed, {0}));
  nn::initialize_uniform(critic_, derive_seed(init_seed, {1}));
  target_actor_ = actor_;
  target_critic_ = critic_;

  std::vector<double> low = concat(spec_.observation_low, spec_.goal_low);
  std::vector<double> high = concat(spec_.observation_high, spec_.goal_high);
  input_offset_.resize(state_goal);
  input_scale_.resize(state_goal);
  for (int i = 0; i < state_goal; ++i) {
    input_offset_(i) = 0.5 * (low[i] + high[i]);
    input_scale_(i) = 2.0 / (high[i] - low[i]);
  }
}

VectorXd DdpgAgent::normalize(std::span<const double> observation_goal) const {
  require(static_cast<Eigen::Index>(observation_goal.size()) == input_offset_.size(),
          fmt::format("observation||goal length {} does not match expected {}",
                      observation_goal.size(), input_offset_.size()));
  VectorXd x = Eigen::Map<const VectorXd>(observation_goal.data(), input_offset_.size());
  return (x - input_offset_).cwiseProduct(input_scale_);
}

MatrixXd DdpgAgent::normalize_inputs(std::span<const replay::Transition> batch, bool next) const {
  MatrixXd x(input_offset_.size(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j)
    x.col(static_cast<Eigen::Index>(j)) =
        normalize(next ? batch[j].next_state_goal : batch[j].state_goal);
  return x;
}

std::vector<double> DdpgAgent::act(std::span<const double> observation_goal, bool explore,
                                   Rng& rng) const {
  const VectorXd x = normalize(observation_goal);
  const VectorXd out =
      nn::forward(actor_, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  const double bound = spec_.action_bound;
  std::vector<double> action(out.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) action[i] = bound * out(i);
  if (!explore) return action;

  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < params_.epsilon) {
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (auto& a : action) a = uniform(rng);
    return action;
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sigma = params_.eta * bound;
  for (auto& a : action) a = std::clamp(a + sigma * noise(rng), -bound, bound);
  return action;
}

VectorXd DdpgAgent::critic_target(std::span<const replay::Transition> batch) const {
  require(!batch.empty(), "critic_target needs a non-empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const MatrixXd next = normalize_inputs(batch, true);
  const MatrixXd next_action = nn::forward_batch(target_actor_, next);
  MatrixXd critic_in(next.rows() + next_action.rows(), n);
  critic_in << next, next_action;
  const MatrixXd next_q = nn::forward_batch(target_critic_, critic_in);

  VectorXd y(n);
  const double gamma = params_.gamma;
  const double lowest = gamma < 1.0 ? -1.0 / (1.0 - gamma) : -static_cast<double>(spec_.horizon);
  for (Eigen::Index j = 0; j < n; ++j) {
    y(j) = batch[static_cast<std::size_t>(j)].reward + gamma * next_q(0, j);
    if (target_clip_) y(j) = std::clamp(y(j), lowest, 0.0);
  }
  return y;
}

Losses DdpgAgent::train_step(std::span<const replay::Transition> batch) {
  require(!batch.empty(), "train_step needs a non-empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);
  const double bound = spec_.action_bound;
  const int action_dim = spec_.action_dim;

  const VectorXd y = critic_target(batch);
  const MatrixXd states = normalize_inputs(batch, false);
  MatrixXd actions(action_dim, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& a = batch[static_cast<std::size_t>(j)].action;
    require(static_cast<int>(a.size()) == action_dim, "transition action has wrong length");
    for (int i = 0; i < action_dim; ++i) actions(i, j) = a[i] / bound;
  }

  // Critic: mean squared error to y.
  MatrixXd critic_in(states.rows() + action_dim, n);
  critic_in << states, actions;
  nn::Tape critic_tape;
  const MatrixXd q = nn::forward_batch(critic_, critic_in, &critic_tape);
  const MatrixXd residual = q - y.transpose();
  Losses losses;
  losses.critic = residual.squaredNorm() * inv_n;
  const auto critic_grads = nn::backward_batch(critic_, critic_tape, 2.0 * inv_n * residual);

  // Actor: -mean Q(s, mu(s)); the critic only routes the gradient.
  nn::Tape actor_tape;
  const MatrixXd policy = nn::forward_batch(actor_, states, &actor_tape);
  MatrixXd policy_in(states.rows() + action_dim, n);
  policy_in << states, policy;
  nn::Tape policy_tape;
  const MatrixXd policy_q = nn::forward_batch(critic_, policy_in, &policy_tape);
  losses.actor = -policy_q.sum() * inv_n;
  const auto through_critic = nn::backward_batch(
      critic_, policy_tape, MatrixXd::Constant(1, n, -inv_n));
  const MatrixXd policy_grad = through_critic.input_grad.bottomRows(action_dim);
  const auto actor_grads = nn::backward_batch(actor_, actor_tape, policy_grad);

  if (!std::isfinite(losses.critic) || !std::isfinite(losses.actor))
    throw NumericalError(fmt::format("non-finite loss (critic {}, actor {})", losses.critic,
                                     losses.actor));

  nn::adam_step(critic_, critic_grads.grads, params_.alpha_critic);
  nn::adam_step(actor_, actor_grads.grads, params_.alpha_actor);
  return losses;
}

void DdpgAgent::update_targets() {
  const double main_weight =
      polyak_ == PolyakConvention::kBlendMain ? params_.tau : 1.0 - params_.tau;
  blend(target_actor_, actor_, main_weight);
  blend(target_critic_, critic_, main_weight);
}

replay::Episode collect_episode(const DdpgAgent& agent, envs::Env& env, std::uint64_t reset_seed,
                                Rng& rng) {
  replay::Episode episode;
  auto obs = env.reset(reset_seed);
  episode.desired_goal = obs.desired_goal;
  const int horizon = env.spec().horizon;
  episode.steps.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    auto action = agent.act(concat(obs.observation, obs.desired_goal), true, rng);
    auto result = env.step(action);
    replay::EpisodeStep step;
    step.observation = std::move(obs.observation);
    step.achieved_goal = std::move(obs.achieved_goal);
    step.action = std::move(action);
    step.next_observation = result.observation.observation;
    step.next_achieved_goal = result.observation.achieved_goal;
    episode.steps.push_back(std::move(step));
    obs = std::move(result.observation);
  }
  return episode;
}

double evaluate(const DdpgAgent& agent, envs::Env& env, int n_episodes, std::uint64_t seed) {
  require(n_episodes >= 1, "evaluate needs at least one episode");
  Rng unused(0);
  int successes = 0;
  for (int i = 0; i < n_episodes; ++i) {
    auto obs = env.reset(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    for (int t = 0; t < env.spec().horizon; ++t) {
      const auto action = agent.act(concat(obs.observation, obs.desired_goal), false, unused);
      obs = env.step(action).observation;
    }
    if (envs::is_success(obs.achieved_goal, obs.desired_goal, env.spec())) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(n_episodes);
}

double train_epoch(DdpgAgent& agent, envs::Env& env, replay::ReplayBuffer& buffer,
                   const TrainConfig& config, Rng& rng, std::uint64_t eval_seed) {
  const envs::EnvSpec spec = env.spec();
  const replay::RewardFn reward = [spec](std::span<const double> achieved,
                                         std::span<const double> desired) {
    return envs::compute_reward(achieved, desired, spec);
  };
  for (int cycle = 0; cycle < config.cycles_per_epoch; ++cycle) {
    for (int e = 0; e < config.episodes_per_cycle; ++e) {
      const auto episode = collect_episode(agent, env, rng(), rng);
      replay::store_episode(buffer, episode, config.her_k, config.her_strategy, reward, rng);
    }
    for (int s = 0; s < config.optimize_steps_per_cycle; ++s) {
      const auto batch = buffer.sample(static_cast<std::size_t>(config.batch_size), rng());
      agent.train_step(batch);
      agent.update_targets();
    }
  }
  return evaluate(agent, env, config.eval_episodes, eval_seed);
}

TrainingSession::TrainingSession(const std::string& env_name, const envs::EnvOverrides& overrides,
                                 const HyperParams& params, const TrainConfig& config,
                                 std::uint64_t seed)
    : config_(config),
      seed_(seed),
      env_(envs::make_env(env_name, overrides)),
      agent_(env_->spec(), params, config, derive_seed(seed, {stream::kAgentInit})),
      buffer_(config.buffer_capacity),
      rng_(derive_seed(seed, {stream::kExploration})) {
  config_.validate();
}

double TrainingSession::run_epoch() {
  ++epochs_;
  const auto eval_seed =
      derive_seed(seed_, {stream::kEvaluation, static_cast<std::uint64_t>(epochs_)});
  return train_epoch(agent_, *env_, buffer_, config_, rng_, eval_seed);
}

TrainingOutcome train(TrainingSession& session, const TrainConfig& config, bool stop_at_threshold,
                      const EpochCallback& on_epoch) {
  TrainingOutcome outcome;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double rate = 0.0;
    try {
      rate = session.run_epoch();
    } catch (const NumericalError& e) {
      outcome.failed = true;
      outcome.failure_reason = e.what();
      break;
    }
    outcome.success_rates.push_back(rate);
    outcome.best_success = std::max(outcome.best_success, rate);
    if (on_epoch) on_epoch(epoch, rate);
    if (!outcome.epochs_to_threshold && rate >= config.success_threshold) {
      outcome.epochs_to_threshold = epoch;
      if (stop_at_threshold) break;
    }
  }
  return outcome;
}

}  // namespace hertune::agent
