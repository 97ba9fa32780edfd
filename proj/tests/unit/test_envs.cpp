#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "arena/envs/cartpole.hpp"
#include "arena/envs/coopnav.hpp"
#include "arena/envs/echo.hpp"
#include "arena/envs/registry.hpp"
#include "coopnav_oracle.hpp"

namespace arena::envs {
namespace {

std::vector<Value> zero_actions(int n) { return std::vector<Value>(static_cast<std::size_t>(n), Tensor::vector({0.0, 0.0})); }

TEST(CoopNav, ResetLayout) {
  CoopNav env{CoopNavConfig{}};
  const auto obs = env.reset(42);
  ASSERT_EQ(obs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& o = std::get<Tensor>(obs[i]).data;
    ASSERT_EQ(o.size(), 14u);
    EXPECT_EQ(o[2], 0.0);
    EXPECT_EQ(o[3], 0.0);
    const auto& s = env.state();
    EXPECT_EQ(o[0], s.agent_pos[i][0]);
    EXPECT_EQ(o[4], s.target_pos[0][0] - s.agent_pos[i][0]);
    EXPECT_EQ(o[5], s.target_pos[0][1] - s.agent_pos[i][1]);
    const std::size_t other = i == 0 ? 1 : 0;
    EXPECT_EQ(o[10], s.agent_pos[other][0] - s.agent_pos[i][0]);
  }
  EXPECT_EQ(env.reset(42), obs);
  EXPECT_NE(env.reset(43), obs);
}

TEST(CoopNav, TargetsRespectSeparation) {
  CoopNav env{CoopNavConfig{}};
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    env.reset(seed);
    const auto& t = env.state().target_pos;
    for (std::size_t a = 0; a < t.size(); ++a) {
      EXPECT_LE(std::abs(t[a][0]), 0.9);
      EXPECT_LE(std::abs(t[a][1]), 0.9);
      for (std::size_t b = a + 1; b < t.size(); ++b)
        EXPECT_GE(std::hypot(t[a][0] - t[b][0], t[a][1] - t[b][1]), 0.3);
    }
  }
}

TEST(CoopNav, ImpossibleSeparationFails) {
  CoopNavConfig c;
  c.min_target_separation = 5.0;
  CoopNav env{c};
  EXPECT_THROW(env.reset(1), SamplingFailure);
}

CoopNavState layout(std::vector<Vec2> agents, std::vector<Vec2> targets) {
  CoopNavState s;
  s.agent_vel.assign(agents.size(), Vec2{0.0, 0.0});
  s.agent_pos = std::move(agents);
  s.target_pos = std::move(targets);
  return s;
}

TEST(CoopNav, AllTargetsCoveredScoresThreeEach) {
  CoopNav env{CoopNavConfig{}};
  env.reset(0);
  env.set_state(layout({{0.5, 0.5}, {-0.5, 0.5}, {0.0, -0.5}}, {{0.5, 0.5}, {-0.5, 0.5}, {0.0, -0.5}}));
  double total = 0.0;
  for (int t = 0; t < 300; ++t) {
    const auto b = env.step(zero_actions(3));
    EXPECT_EQ(b.rewards, (std::vector<double>{3.0, 3.0, 3.0}));
    total += b.rewards[0];
    EXPECT_EQ(b.done, t == 299);
  }
  EXPECT_EQ(total, 900.0);
  EXPECT_THROW(env.step(zero_actions(3)), StepAfterDone);
}

TEST(CoopNav, NoAgentNearTargets) {
  CoopNav env{CoopNavConfig{}};
  env.reset(0);
  env.set_state(layout({{0.9, 0.9}, {0.9, -0.9}, {-0.9, 0.9}}, {{0.0, 0.0}, {0.3, 0.0}, {0.0, 0.3}}));
  EXPECT_EQ(env.step(zero_actions(3)).rewards, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(CoopNav, CollisionPenaltyFollowsMembership) {
  CoopNavConfig c;
  c.collision_penalty_weight = 0.3;
  CoopNav env{c};
  env.reset(0);
  env.set_state(layout({{0.2, 0.2}, {0.2, 0.2}, {-0.8, -0.8}}, {{0.2, 0.2}, {0.8, 0.8}, {-0.2, 0.6}}));
  const auto pos = env.state().agent_pos;
  const auto hits = collision_count(pos, c.agent_radius);
  const double occupied = occupancy_count(pos, env.state().target_pos, c.occupancy_radius);
  const auto b = env.step(zero_actions(3));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(b.rewards[i], occupied - 0.3 * hits[i]);
  EXPECT_DOUBLE_EQ(b.rewards[0], 1.0 - 0.3);
  EXPECT_DOUBLE_EQ(b.rewards[1], 1.0 - 0.3);
  EXPECT_DOUBLE_EQ(b.rewards[2], 1.0);
}

TEST(CoopNavOracle, GreedyClearsAndRandomStaysLow) {
  CoopNav env{CoopNavConfig{}};
  std::mt19937_64 rng(2024);
  double greedy = 0.0, random = 0.0;
  const int episodes = 100;
  for (int e = 0; e < episodes; ++e) {
    const auto seed = 1000 + static_cast<std::uint64_t>(e);
    greedy += testing::coopnav_episode(env, seed, [](const CoopNav& en) { return testing::greedy_actions(en); });
    random += testing::coopnav_episode(env, seed, [&](const CoopNav& en) { return testing::random_actions(en, rng); });
  }
  EXPECT_GE(greedy / episodes, 850.0);
  EXPECT_LE(random / episodes, 150.0);
}

TEST(OccupancyCount, Examples) {
  const std::vector<Vec2> targets{{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}};
  EXPECT_EQ(occupancy_count(targets, targets, 0.1), 3);
  EXPECT_EQ(occupancy_count({{0.5, 0.0}, {0.5, 0.0}, {0.5, 0.0}}, targets, 0.1), 1);
  EXPECT_EQ(occupancy_count({{0.1, 0.0}, {2.0, 2.0}, {2.0, 2.0}}, targets, 0.1), 1);
  EXPECT_EQ(occupancy_count({{0.25, 0.0}}, {{0.0, 0.0}, {0.5, 0.0}}, 0.25), 2);
}

TEST(CollisionCount, Examples) {
  EXPECT_EQ(collision_count({{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}}, 0.05), (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(collision_count({{0.0, 0.0}, {0.0, 0.0}, {0.5, 0.5}}, 0.05), (std::vector<int>{1, 1, 0}));
  EXPECT_EQ(collision_count({{0.1, 0.1}, {0.1, 0.1}, {0.1, 0.1}}, 0.05), (std::vector<int>{2, 2, 2}));
}

TEST(CoopNav, RandomActionsPreserveBoundsAndSpeed) {
  CoopNav env{CoopNavConfig{}};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int ep = 0; ep < 20; ++ep) {
    env.reset(static_cast<std::uint64_t>(ep));
    bool done = false;
    while (!done) {
      std::vector<Value> a;
      for (int i = 0; i < 3; ++i) a.push_back(Tensor::vector({u(rng), u(rng)}));
      const auto b = env.step(a);
      done = b.done;
      EXPECT_EQ(b.rewards[0], b.rewards[1]);
      EXPECT_EQ(b.rewards[1], b.rewards[2]);
      EXPECT_LE(b.rewards[0], 3.0);
      for (std::size_t i = 0; i < 3; ++i) {
        const auto& s = env.state();
        EXPECT_LE(std::abs(s.agent_pos[i][0]), 1.0);
        EXPECT_LE(std::abs(s.agent_pos[i][1]), 1.0);
        EXPECT_LE(std::hypot(s.agent_vel[i][0], s.agent_vel[i][1]), 0.1 + 1e-12);
      }
    }
  }
}

TEST(CoopNav, Deterministic) {
  CoopNav a{CoopNavConfig{}}, b{CoopNavConfig{}};
  a.reset(5);
  b.reset(5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<Value> act;
    for (int i = 0; i < 3; ++i) act.push_back(Tensor::vector({u(rng), u(rng)}));
    EXPECT_EQ(a.step(act), b.step(act));
  }
}

TEST(CoopNav, TimeLimitMarksFinalStep) {
  CoopNavConfig c;
  c.episode_len = 2;
  CoopNav env{c};
  env.reset(0);
  EXPECT_TRUE(env.step(zero_actions(3)).infos[0].empty());
  const auto last = env.step(zero_actions(3));
  EXPECT_TRUE(last.done);
  EXPECT_EQ(last.infos[0].at(kTimeLimitKey), "true");
}

TEST(CoopNav, UnknownParameterRejected) {
  EXPECT_THROW(make_env("coopnav", {{"n_agentz", 3}}), InvalidEnvConfig);
  EXPECT_THROW(make_env("coopnav", {{"collision_penalty_weight", -1}}), InvalidEnvConfig);
  EXPECT_THROW(make_env("nosuch", {}), InvalidEnvConfig);
}

TEST(Echo, StepSemantics) {
  EchoEnv env{EchoEnvConfig::from_params({{"n_entities", 2}, {"horizon", 3}})};
  env.reset(0);
  const std::vector<Value> act{std::int64_t{1}, std::int64_t{0}};
  auto b = env.step(act);
  EXPECT_EQ(b.rewards, (std::vector<double>{1.0, 0.0}));
  EXPECT_FALSE(b.done);
  EXPECT_EQ(b.observations[1], Value{Tensor::vector({1.0, 1.0})});
  env.step(act);
  b = env.step(act);
  EXPECT_TRUE(b.done);
  EXPECT_THROW(env.step(act), StepAfterDone);

  EchoEnv again{EchoEnvConfig::from_params({{"n_entities", 2}, {"horizon", 3}})};
  env.reset(0);
  again.reset(0);
  for (int t = 0; t < 3; ++t) EXPECT_EQ(env.step(act), again.step(act));
}

TEST(Echo, ExitedEntityGetsNullObservation) {
  EchoEnv env{EchoEnvConfig::from_params({{"n_entities", 2}, {"horizon", 4}, {"exit_entity", 1}, {"exit_step", 2}})};
  env.reset(0);
  const std::vector<Value> act{std::int64_t{3}, std::int64_t{3}};
  env.step(act);
  const auto b = env.step(act);
  EXPECT_EQ(b.infos[1].at(kExitedKey), "true");
  EXPECT_EQ(b.observations[1], null_observation(env.entities()[1].obs_space));
  EXPECT_FALSE(validate_batch(env.entities(), b).has_value());
  EXPECT_EQ(env.step(act).rewards[1], 0.0);
}

TEST(CartPole, UprightAlternatingSurvives) {
  CartPole env;
  env.reset(3);
  int steps = 0;
  for (int t = 0; t < 20; ++t) {
    const auto b = env.step(std::vector<Value>{std::int64_t{t % 2}});
    EXPECT_EQ(b.rewards[0], 1.0);
    ++steps;
    if (b.done) break;
  }
  EXPECT_GT(steps, 1);
}

TEST(CartPole, TerminatesPastAngleLimit) {
  CartPole env;
  env.reset(0);
  env.set_state({0.0, 0.0, CartPole::kThetaLimit - 1e-4, 1.0, 0});
  const auto b = env.step(std::vector<Value>{std::int64_t{1}});
  EXPECT_GT(std::abs(env.state().theta), CartPole::kThetaLimit);
  EXPECT_TRUE(b.done);
  EXPECT_EQ(b.infos[0].count(kTimeLimitKey), 0u);
  EXPECT_THROW(env.step(std::vector<Value>{std::int64_t{1}}), StepAfterDone);
}

TEST(CartPole, EulerStepMatchesHandComputation) {
  CartPole env;
  env.reset(0);
  env.set_state({0.1, 0.2, 0.05, -0.1, 0});
  env.step(std::vector<Value>{std::int64_t{0}});
  // Independent recomputation of one explicit Euler step with force -10.
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, f = -10.0, dt = 0.02;
  const double th = 0.05, thd = -0.1;
  const double temp = (f + mp * l * thd * thd * std::sin(th)) / (mc + mp);
  const double thacc = (g * std::sin(th) - std::cos(th) * temp) / (l * (4.0 / 3.0 - mp * std::cos(th) * std::cos(th) / (mc + mp)));
  const double xacc = temp - mp * l * thacc * std::cos(th) / (mc + mp);
  EXPECT_NEAR(env.state().x, 0.1 + dt * 0.2, 1e-12);
  EXPECT_NEAR(env.state().x_dot, 0.2 + dt * xacc, 1e-12);
  EXPECT_NEAR(env.state().theta, th + dt * thd, 1e-12);
  EXPECT_NEAR(env.state().theta_dot, thd + dt * thacc, 1e-12);
}

TEST(CartPole, TimeLimitAt500) {
  CartPole env;
  env.reset(0);
  env.set_state({0.0, 0.0, 0.0, 0.0, 499});
  const auto b = env.step(std::vector<Value>{std::int64_t{0}});
  EXPECT_TRUE(b.done);
  EXPECT_EQ(b.infos[0].at(kTimeLimitKey), "true");
}

TEST(CartPole, Deterministic) {
  CartPole a, b;
  EXPECT_EQ(a.reset(77), b.reset(77));
  for (int t = 0; t < 30; ++t) {
    const std::vector<Value> act{std::int64_t{(t / 3) % 2}};
    const auto x = a.step(act);
    EXPECT_EQ(x, b.step(act));
    if (x.done) break;
  }
}

}  // namespace
}  // namespace arena::envs
