#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "hertune/envs.hpp"
#include "hertune/error.hpp"
#include "hertune/replay.hpp"
#include "oracles.hpp"

using namespace hertune;
using namespace hertune::replay;

namespace {

// Synthetic 1-D episode: achieved goal after step t is t + 1.
Episode line_episode(int horizon) {
  Episode ep;
  ep.desired_goal = {1000.0};
  for (int t = 0; t < horizon; ++t) {
    EpisodeStep s;
    s.observation = {static_cast<double>(t), 7.0};
    s.achieved_goal = {static_cast<double>(t)};
    s.action = {0.5 * t, -0.5};
    s.next_observation = {static_cast<double>(t + 1), 7.0};
    s.next_achieved_goal = {static_cast<double>(t + 1)};
    ep.steps.push_back(s);
  }
  return ep;
}

const RewardFn kExact = [](std::span<const double> a, std::span<const double> d) {
  return a[0] == d[0] ? 0.0 : -1.0;
};

Transition numbered(double x) {
  Transition t;
  t.state_goal = {x, 0.0};
  t.action = {0.0};
  t.next_state_goal = {x, 0.0};
  t.achieved_goal = {x};
  t.next_achieved_goal = {x};
  return t;
}

}  // namespace

TEST_CASE("future strategy with k=4 on T=50 stores 50 originals and 194 relabels") {
  // Step t has min(4, 50 - t) distinct later goals: 47 * 4 + 3 + 2 + 1.
  ReplayBuffer buf(10000);
  Rng rng(1);
  const auto n = store_episode(buf, line_episode(50), 4, HerStrategy::kFuture, kExact, rng);
  CHECK(n == 244);
  CHECK(buf.size() == 244);
  int originals = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) originals += buf.at(i).goal(1)[0] == 1000.0;
  CHECK(originals == 50);
  CHECK(n - 50 <= 200);
}

TEST_CASE("future relabels are distinct, later, and only change goal and reward") {
  ReplayBuffer buf(10000);
  Rng rng(2);
  const auto ep = line_episode(50);
  store_episode(buf, ep, 4, HerStrategy::kFuture, kExact, rng);
  std::size_t i = 0;
  for (int t = 0; t < 50; ++t) {
    const auto& orig = buf.at(i++);
    CHECK(orig.state_goal[0] == t);
    std::set<double> goals;
    const int draws = std::min(4, 50 - t);
    for (int d = 0; d < draws; ++d) {
      const auto& r = buf.at(i++);
      CHECK(r.state_goal[0] == orig.state_goal[0]);
      CHECK(r.state_goal[1] == orig.state_goal[1]);
      CHECK(r.action == orig.action);
      CHECK(r.achieved_goal == orig.achieved_goal);
      CHECK(r.next_achieved_goal == orig.next_achieved_goal);
      CHECK(r.next_state_goal[0] == orig.next_state_goal[0]);
      const double g = r.goal(1)[0];
      CHECK(g >= t + 1);
      CHECK(g <= 50);
      CHECK(r.next_state_goal.back() == g);
      goals.insert(g);
    }
    CHECK(static_cast<int>(goals.size()) == draws);
  }
  CHECK(i == buf.size());
}

TEST_CASE("final strategy relabels with the last achieved goal") {
  ReplayBuffer buf(1000);
  Rng rng(3);
  const auto n = store_episode(buf, line_episode(10), 4, HerStrategy::kFinal, kExact, rng);
  CHECK(n == 20);
  const auto& last = buf.at(19);
  CHECK(last.goal(1)[0] == 10.0);
  CHECK(last.reward == 0.0);
  CHECK(buf.at(1).goal(1)[0] == 10.0);
  CHECK(buf.at(1).reward == -1.0);
}

TEST_CASE("her_k = 0 stores only the originals") {
  ReplayBuffer a(1000), b(1000);
  Rng r1(5), r2(99);
  const auto ep = line_episode(20);
  CHECK(store_episode(a, ep, 0, HerStrategy::kFuture, kExact, r1) == 20);
  CHECK(store_episode(b, ep, 0, HerStrategy::kFinal, kExact, r2) == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(a.at(i) == b.at(i));
}

TEST_CASE("malformed episodes are rejected") {
  ReplayBuffer buf(100);
  Rng rng(1);
  auto ep = line_episode(5);
  ep.steps[2].observation[0] = 99.0;
  CHECK_THROWS_AS(store_episode(buf, ep, 4, HerStrategy::kFuture, kExact, rng), ContractViolation);
  auto bad_goal = line_episode(5);
  bad_goal.desired_goal = {1.0, 2.0};
  CHECK_THROWS_AS(store_episode(buf, bad_goal, 4, HerStrategy::kFuture, kExact, rng),
                  ContractViolation);
  CHECK_THROWS_AS(store_episode(buf, line_episode(5), -1, HerStrategy::kFuture, kExact, rng),
                  ContractViolation);
  CHECK(buf.empty());
}

TEST_CASE("every stored reward matches the reward function on a real env") {
  auto env = envs::make_env("push");
  const auto spec = env->spec();
  const RewardFn reward = [spec](std::span<const double> a, std::span<const double> d) {
    return envs::compute_reward(a, d, spec);
  };
  ReplayBuffer buf(100000);
  Rng rng(4);
  std::mt19937_64 act_rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::uint64_t e = 0; e < 10; ++e) {
    Episode ep;
    auto obs = env->reset(e);
    ep.desired_goal = obs.desired_goal;
    for (int t = 0; t < spec.horizon; ++t) {
      const std::vector<double> a = {u(act_rng), u(act_rng)};
      const auto r = env->step(a);
      ep.steps.push_back({obs.observation, obs.achieved_goal, a, r.observation.observation,
                          r.observation.achieved_goal});
      obs = r.observation;
    }
    store_episode(buf, ep, 4, HerStrategy::kFuture, reward, rng);
  }
  int zeros = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const auto& t = buf.at(i);
    CHECK(t.reward == envs::compute_reward(t.next_achieved_goal, t.goal(2), spec));
    zeros += t.reward == 0.0;
  }
  CHECK(zeros > 0);
}

TEST_CASE("ring buffer drops the oldest entries") {
  ReplayBuffer buf(5);
  for (int i = 0; i < 8; ++i) buf.add(numbered(i));
  CHECK(buf.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf.at(i).state_goal[0] == static_cast<double>(i + 3));
  CHECK_THROWS(buf.at(5));
  CHECK_THROWS_AS(ReplayBuffer(0), ContractViolation);
}

TEST_CASE("sampling") {
  ReplayBuffer empty(10);
  CHECK_THROWS_AS(empty.sample(4, 1), std::runtime_error);

  ReplayBuffer one(10);
  one.add(numbered(42));
  const auto batch = one.sample(8, 3);
  REQUIRE(batch.size() == 8);
  for (const auto& t : batch) CHECK(t == one.at(0));

  ReplayBuffer ten(10);
  for (int i = 0; i < 10; ++i) ten.add(numbered(i));
  CHECK(ten.sample(32, 7) == ten.sample(32, 7));
  CHECK(ten.sample(32, 7) != ten.sample(32, 8));

  const int n = 100000;
  std::vector<int> counts(10, 0);
  for (const auto& t : ten.sample(n, 11)) ++counts[static_cast<std::size_t>(t.state_goal[0])];
  const double band = oracle::three_sigma(0.1, n);
  for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 0.1) <= band);
}
