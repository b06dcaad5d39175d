#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hertune/agent.hpp"
#include "hertune/error.hpp"
#include "oracles.hpp"

using namespace hertune;
using namespace hertune::agent;

namespace {

// 1-D observation and goal on [-1, 1], so network inputs equal world values.
envs::EnvSpec unit_spec() {
  envs::EnvSpec s;
  s.observation_dim = 1;
  s.goal_dim = 1;
  s.action_dim = 1;
  s.observation_low = {-1.0};
  s.observation_high = {1.0};
  s.goal_low = {-1.0};
  s.goal_high = {1.0};
  return s;
}

TrainConfig linear_config() {
  TrainConfig c;
  c.hidden_layers = {};
  return c;
}

replay::Transition transition(double s, double g, double a, double r, double s_next) {
  replay::Transition t;
  t.state_goal = {s, g};
  t.action = {a};
  t.reward = r;
  t.next_state_goal = {s_next, g};
  t.achieved_goal = {s};
  t.next_achieved_goal = {s_next};
  return t;
}

void zero(nn::Mlp& net) {
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
}

bool within_one_ulp(double a, double b) {
  return a == b || std::nextafter(a, b) == b;
}

}  // namespace

TEST_CASE("hyperparameter presets and validation") {
  const auto o = HyperParams::original();
  CHECK(o.gamma == 0.98);
  CHECK(o.tau == 0.95);
  CHECK(o.alpha_critic == 0.001);
  CHECK(o.alpha_actor == 0.001);
  CHECK(o.epsilon == 0.3);
  CHECK(o.eta == 0.2);
  const auto t = HyperParams::tuned();
  CHECK(t.gamma == 0.88);
  CHECK(t.tau == 0.184);
  CHECK(t.alpha_critic == 0.001);
  CHECK(t.alpha_actor == 0.001);
  CHECK(t.epsilon == 0.055);
  CHECK(t.eta == 0.774);
  HyperParams bad;
  bad.eta = 1.5;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad.eta = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("act: greedy output is the scaled actor output") {
  auto spec = unit_spec();
  spec.action_bound = 2.0;
  DdpgAgent agent(spec, {}, linear_config(), 1);
  zero(agent.actor());
  agent.actor().weights[0](0, 0) = 0.5;
  Rng rng(1);
  const std::vector<double> x = {0.4, 0.0};
  const auto a = agent.act(x, false, rng);
  CHECK(a[0] == doctest::Approx(2.0 * std::tanh(0.2)).epsilon(1e-15));
  CHECK_THROWS_AS(agent.act(std::vector<double>{0.4}, false, rng), ContractViolation);
}

TEST_CASE("act: epsilon = 1 gives uniform actions in bounds") {
  HyperParams p;
  p.epsilon = 1.0;
  auto spec = unit_spec();
  spec.action_bound = 0.5;
  DdpgAgent agent(spec, p, linear_config(), 1);
  Rng rng(3);
  const std::vector<double> x = {0.1, 0.2};
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double a = agent.act(x, true, rng)[0];
    CHECK(std::abs(a) <= 0.5);
    sum += a;
    sq += a * a;
  }
  // Uniform on [-0.5, 0.5]: mean 0, variance 1/12.
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0 / 12.0).epsilon(0.03));
}

TEST_CASE("act: epsilon = 0 and eta = 0 is deterministic") {
  HyperParams p;
  p.epsilon = 0.0;
  p.eta = 0.0;
  DdpgAgent agent(unit_spec(), p, TrainConfig{}, 4);
  Rng r1(1), r2(2);
  const std::vector<double> x = {0.3, -0.6};
  const auto greedy = agent.act(x, false, r1);
  for (int i = 0; i < 10; ++i) {
    CHECK(agent.act(x, true, r1) == greedy);
    CHECK(agent.act(x, true, r2) == greedy);
  }
}

TEST_CASE("act: random-branch frequency for epsilon = 0.3") {
  // Zero actor and eta = 0: the greedy branch returns exactly 0, the random
  // branch almost surely does not. 3 sigma for p=0.3, n=10000 is 0.0137.
  HyperParams p;
  p.epsilon = 0.3;
  p.eta = 0.0;
  DdpgAgent agent(unit_spec(), p, linear_config(), 1);
  zero(agent.actor());
  Rng rng(17);
  const std::vector<double> x = {0.0, 0.0};
  const int n = 10000;
  int random = 0;
  for (int i = 0; i < n; ++i) random += agent.act(x, true, rng)[0] != 0.0;
  const double freq = random / static_cast<double>(n);
  CHECK(freq >= 0.2863);
  CHECK(freq <= 0.3137);
  CHECK(oracle::three_sigma(0.3, n) == doctest::Approx(0.0137).epsilon(0.01));
}

TEST_CASE("act: gaussian noise has std eta * bound") {
  HyperParams p;
  p.epsilon = 0.0;
  p.eta = 0.2;
  auto spec = unit_spec();
  spec.action_bound = 1.0;
  DdpgAgent agent(spec, p, linear_config(), 1);
  zero(agent.actor());
  Rng rng(5);
  const std::vector<double> x = {0.0, 0.0};
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double a = agent.act(x, true, rng)[0];
    sq += a * a;
  }
  CHECK(std::sqrt(sq / n) == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("critic_target examples") {
  auto check_target = [](double gamma, double q_next, double reward, bool clip) {
    HyperParams p;
    p.gamma = gamma;
    auto c = linear_config();
    c.target_clip = clip;
    DdpgAgent agent(unit_spec(), p, c, 1);
    zero(agent.target_critic());
    agent.target_critic().biases[0](0) = q_next;
    const std::vector<replay::Transition> batch = {transition(0.1, 0.2, 0.3, reward, 0.4)};
    return agent.critic_target(batch)(0);
  };
  CHECK(check_target(0.98, -10.0, -1.0, true) == doctest::Approx(-10.8).epsilon(1e-15));
  CHECK(check_target(0.5, -3.0, -1.0, false) == doctest::Approx(-2.5).epsilon(1e-15));
  CHECK(check_target(0.5, -3.0, -1.0, true) == -2.0);
  CHECK(check_target(0.98, 5.0, 0.0, true) == 0.0);
  CHECK(check_target(0.98, 5.0, 0.0, false) == doctest::Approx(4.9).epsilon(1e-15));
  // gamma = 1 clips at -horizon.
  CHECK(check_target(1.0, -100.0, -1.0, true) == -50.0);
}

TEST_CASE("critic_target with gamma = 0 equals rewards exactly") {
  HyperParams p;
  p.gamma = 0.0;
  DdpgAgent agent(unit_spec(), p, TrainConfig{}, 8);
  std::vector<replay::Transition> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(transition(0.1 * i, -0.2, 0.3, i % 2 ? 0.0 : -1.0, 0.5));
  const auto y = agent.critic_target(batch);
  for (int i = 0; i < 6; ++i) CHECK(y(i) == batch[static_cast<std::size_t>(i)].reward);
}

TEST_CASE("train_step with zero learning rates leaves parameters unchanged") {
  HyperParams p;
  p.alpha_actor = 0.0;
  p.alpha_critic = 0.0;
  DdpgAgent agent(unit_spec(), p, TrainConfig{}, 2);
  const auto actor = agent.actor().weights;
  const auto critic = agent.critic().weights;
  const std::vector<replay::Transition> batch = {transition(0.1, 0.2, 0.3, -1.0, 0.4),
                                                 transition(-0.5, 0.2, -0.9, 0.0, -0.4)};
  const auto losses = agent.train_step(batch);
  CHECK(losses.critic > 0.0);
  CHECK(agent.actor().weights == actor);
  CHECK(agent.critic().weights == critic);
  CHECK(agent.critic().adam.step == 1);
}

TEST_CASE("train_step: zero residual gives zero critic loss") {
  DdpgAgent agent(unit_spec(), {}, linear_config(), 2);
  zero(agent.critic());
  zero(agent.target_critic());
  const std::vector<replay::Transition> batch = {transition(0.1, 0.2, 0.3, 0.0, 0.4)};
  CHECK(agent.train_step(batch).critic == 0.0);
}

TEST_CASE("train_step: scalar oracle") {
  // Critic Q = c_s s + c_g g + c_a a + c_0 (no hidden layer, identity out).
  // Actor mu = tanh(w_s s + w_g g + w_0).
  const double cs = 0.1, cg = -0.2, ca = 2.0, c0 = 0.3;
  const double ws = 0.6, wg = -0.4, w0 = 0.05;
  const double s = 0.5, g = -0.2, a = 0.4, r = -1.0, s2 = 0.3;
  const double gamma = 0.98, lr_c = 0.01, lr_a = 0.02;

  HyperParams p;
  p.gamma = gamma;
  p.alpha_critic = lr_c;
  p.alpha_actor = lr_a;
  DdpgAgent agent(unit_spec(), p, linear_config(), 1);
  agent.critic().weights[0] << cs, cg, ca;
  agent.critic().biases[0] << c0;
  agent.actor().weights[0] << ws, wg;
  agent.actor().biases[0] << w0;
  agent.target_critic() = agent.critic();
  agent.target_actor() = agent.actor();

  // Hand-derived quantities.
  const double mu_next = std::tanh(ws * s2 + wg * g + w0);
  const double y = r + gamma * (cs * s2 + cg * g + ca * mu_next + c0);
  const double q = cs * s + cg * g + ca * a + c0;
  const double dq = 2.0 * (q - y);
  const double critic_grad[4] = {dq * s, dq * g, dq * a, dq};
  const double pre = ws * s + wg * g + w0;
  const double mu = std::tanh(pre);
  const double actor_loss = -(cs * s + cg * g + ca * mu + c0);
  const double dpre = -ca * (1.0 - mu * mu);
  const double actor_grad[3] = {dpre * s, dpre * g, dpre};

  const std::vector<replay::Transition> batch = {transition(s, g, a, r, s2)};
  const auto losses = agent.train_step(batch);
  CHECK(losses.critic == doctest::Approx((q - y) * (q - y)).epsilon(1e-13));
  CHECK(losses.actor == doctest::Approx(actor_loss).epsilon(1e-13));

  // First Adam moments hold 0.1 * gradient.
  const auto& cm = agent.critic().adam;
  for (int i = 0; i < 3; ++i)
    CHECK(cm.weight_m[0](0, i) == doctest::Approx(0.1 * critic_grad[i]).epsilon(1e-12));
  CHECK(cm.bias_m[0](0) == doctest::Approx(0.1 * critic_grad[3]).epsilon(1e-12));
  const auto& am = agent.actor().adam;
  for (int i = 0; i < 2; ++i)
    CHECK(am.weight_m[0](0, i) == doctest::Approx(0.1 * actor_grad[i]).epsilon(1e-12));
  CHECK(am.bias_m[0](0) == doctest::Approx(0.1 * actor_grad[2]).epsilon(1e-12));

  // Parameters follow the scalar Adam reference.
  const double cw_before[3] = {cs, cg, ca};
  for (int i = 0; i < 3; ++i) {
    oracle::ScalarAdam ref;
    CHECK(agent.critic().weights[0](0, i) ==
          doctest::Approx(ref.step(cw_before[i], critic_grad[i], lr_c)).epsilon(1e-13));
  }
  {
    oracle::ScalarAdam ref;
    CHECK(agent.critic().biases[0](0) == doctest::Approx(ref.step(c0, critic_grad[3], lr_c)).epsilon(1e-13));
  }
  const double aw_before[2] = {ws, wg};
  for (int i = 0; i < 2; ++i) {
    oracle::ScalarAdam ref;
    CHECK(agent.actor().weights[0](0, i) ==
          doctest::Approx(ref.step(aw_before[i], actor_grad[i], lr_a)).epsilon(1e-13));
  }
  // Targets are untouched until update_targets.
  CHECK(agent.target_critic().weights[0](0, 2) == ca);
}

TEST_CASE("train_step: non-finite loss raises NumericalError") {
  DdpgAgent agent(unit_spec(), {}, TrainConfig{}, 2);
  const std::vector<replay::Transition> batch = {
      transition(0.1, 0.2, 0.3, std::numeric_limits<double>::quiet_NaN(), 0.4)};
  CHECK_THROWS_AS(agent.train_step(batch), NumericalError);
  CHECK_THROWS_AS(agent.train_step(std::vector<replay::Transition>{}), ContractViolation);
}

TEST_CASE("polyak update") {
  SUBCASE("tau = 0.184, main 1, target 0") {
    HyperParams p;
    p.tau = 0.184;
    DdpgAgent agent(unit_spec(), p, linear_config(), 1);
    agent.actor().weights[0].setConstant(1.0);
    agent.target_actor().weights[0].setZero();
    agent.update_targets();
    CHECK(agent.target_actor().weights[0](0, 0) == 0.184);
  }
  SUBCASE("endpoints") {
    for (double tau : {0.0, 1.0}) {
      HyperParams p;
      p.tau = tau;
      DdpgAgent agent(unit_spec(), p, TrainConfig{}, 1);
      initialize_uniform(agent.critic(), 99);
      const auto old_target = agent.target_critic().weights;
      agent.update_targets();
      for (std::size_t l = 0; l < old_target.size(); ++l) {
        if (tau == 1.0) CHECK(agent.target_critic().weights[l] == agent.critic().weights[l]);
        else CHECK(agent.target_critic().weights[l] == old_target[l]);
      }
    }
  }
  SUBCASE("exact to one ulp for every parameter") {
    HyperParams p;
    p.tau = 0.37;
    DdpgAgent agent(unit_spec(), p, TrainConfig{}, 1);
    initialize_uniform(agent.actor(), 5);
    initialize_uniform(agent.critic(), 6);
    const nn::Mlp old_actor = agent.target_actor();
    const nn::Mlp old_critic = agent.target_critic();
    agent.update_targets();
    auto check = [](const nn::Mlp& target, const nn::Mlp& main, const nn::Mlp& old) {
      for (std::size_t l = 0; l < target.num_layers(); ++l) {
        for (Eigen::Index i = 0; i < target.weights[l].size(); ++i) {
          const double want = 0.37 * main.weights[l].data()[i] + (1.0 - 0.37) * old.weights[l].data()[i];
          CHECK(within_one_ulp(target.weights[l].data()[i], want));
        }
        for (Eigen::Index i = 0; i < target.biases[l].size(); ++i) {
          const double want = 0.37 * main.biases[l](i) + (1.0 - 0.37) * old.biases[l](i);
          CHECK(within_one_ulp(target.biases[l](i), want));
        }
      }
    };
    check(agent.target_actor(), agent.actor(), old_actor);
    check(agent.target_critic(), agent.critic(), old_critic);
  }
  SUBCASE("retain_target convention keeps tau of the old target") {
    HyperParams p;
    p.tau = 0.95;
    auto c = linear_config();
    c.polyak_convention = PolyakConvention::kRetainTarget;
    DdpgAgent agent(unit_spec(), p, c, 1);
    agent.actor().weights[0].setConstant(1.0);
    agent.target_actor().weights[0].setZero();
    agent.update_targets();
    CHECK(agent.target_actor().weights[0](0, 0) == doctest::Approx(0.05).epsilon(1e-12));
  }
  SUBCASE("targets converge geometrically to frozen mains") {
    HyperParams p;
    p.tau = 0.25;
    DdpgAgent agent(unit_spec(), p, linear_config(), 1);
    agent.actor().weights[0].setConstant(1.0);
    agent.target_actor().weights[0].setZero();
    double err = 1.0;
    for (int i = 0; i < 10; ++i) {
      agent.update_targets();
      const double next = 1.0 - agent.target_actor().weights[0](0, 0);
      CHECK(next / err == doctest::Approx(0.75).epsilon(1e-9));
      err = next;
    }
  }
}

TEST_CASE("evaluate: deterministic and bounded") {
  DdpgAgent agent(envs::make_env("reach")->spec(), {}, TrainConfig{}, 3);
  auto env = envs::make_env("reach");
  const double a = evaluate(agent, *env, 10, 5);
  CHECK(a == evaluate(agent, *env, 10, 5));

  envs::EnvOverrides everything;
  everything.success_distance = 2.0;
  everything.horizon = 3;
  auto easy = envs::make_env("reach", everything);
  DdpgAgent easy_agent(easy->spec(), {}, TrainConfig{}, 3);
  CHECK(evaluate(easy_agent, *easy, 5, 1) == 1.0);

  envs::EnvOverrides nothing;
  nothing.success_distance = 1e-12;
  auto hard = envs::make_env("reach", nothing);
  DdpgAgent hard_agent(hard->spec(), {}, TrainConfig{}, 3);
  CHECK(evaluate(hard_agent, *hard, 5, 1) == 0.0);
  CHECK_THROWS_AS(evaluate(hard_agent, *hard, 0, 1), ContractViolation);
}

TEST_CASE("train_epoch: buffer growth and no-learning epoch") {
  TrainConfig c;
  c.optimize_steps_per_cycle = 0;
  auto env = envs::make_env("reach");
  DdpgAgent agent(env->spec(), {}, c, 9);
  const DdpgAgent initial = agent;
  replay::ReplayBuffer buffer(c.buffer_capacity);
  Rng rng(1);
  const double rate = train_epoch(agent, *env, buffer, c, rng, 77);
  // 10 cycles x 2 episodes x (50 + 194) transitions.
  CHECK(buffer.size() == 4880);
  CHECK(buffer.size() <= 10u * 2u * (50u + 200u));
  CHECK(agent.actor().weights == initial.actor().weights);
  CHECK(agent.critic().weights == initial.critic().weights);
  auto env2 = envs::make_env("reach");
  CHECK(rate == evaluate(initial, *env2, c.eval_episodes, 77));
}

TEST_CASE("training sessions are reproducible per seed") {
  TrainConfig c;
  c.cycles_per_epoch = 2;
  c.optimize_steps_per_cycle = 5;
  c.eval_episodes = 5;
  c.max_epochs = 2;
  TrainingSession a("reach", {}, {}, c, 11), b("reach", {}, {}, c, 11);
  const auto ra = train(a, c, false);
  const auto rb = train(b, c, false);
  CHECK(ra.success_rates == rb.success_rates);
  CHECK(ra.success_rates.size() == 2);
  CHECK(a.agent().actor().weights == b.agent().actor().weights);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c = TrainConfig{};
  c.success_threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  CHECK(polyak_convention_from_string("retain_target") == PolyakConvention::kRetainTarget);
  CHECK(to_string(PolyakConvention::kBlendMain) == "blend_main");
  CHECK_THROWS(polyak_convention_from_string("other"));
}
