#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "arena/learners/agent.hpp"
#include "arena/learners/checkpoint.hpp"
#include "arena/learners/mlp.hpp"
#include "arena/learners/ppo.hpp"
#include "arena/learners/replay.hpp"
#include "arena/learners/sac.hpp"
#include "arena/learners/scripted.hpp"
#include "arena/learners/squashed_gaussian.hpp"
#include "arena/learners/vectors.hpp"
#include "gradcheck.hpp"

namespace arena::learn {
namespace {

std::vector<double> random_params(const Mlp& net, std::mt19937_64& rng) {
  std::vector<double> p(net.param_count());
  std::normal_distribution<double> n(0.0, 0.5);
  for (auto& v : p) v = n(rng);
  return p;
}

// Straightforward loop implementation of the forward pass used as an oracle.
std::vector<double> naive_forward(const std::vector<int>& sizes, const std::vector<double>& p, std::vector<double> x) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    std::vector<double> y(static_cast<std::size_t>(out), 0.0);
    for (int o = 0; o < out; ++o) {
      double s = p[off + static_cast<std::size_t>(in * out + o)];
      for (int i = 0; i < in; ++i) s += p[off + static_cast<std::size_t>(i * out + o)] * x[static_cast<std::size_t>(i)];
      y[static_cast<std::size_t>(o)] = l + 2 < sizes.size() ? std::tanh(s) : s;
    }
    off += static_cast<std::size_t>(in * out + out);
    x = std::move(y);
  }
  return x;
}

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
  Mlp net({3, 5, 2});
  const std::vector<double> p(net.param_count(), 0.0);
  EXPECT_EQ(mlp_forward(net, p, std::vector<double>{1.0, -2.0, 3.0}), (std::vector<double>{0.0, 0.0}));
}

TEST(Mlp, IdentityLayer) {
  Mlp net({3, 3});
  std::vector<double> p(net.param_count(), 0.0);
  for (int i = 0; i < 3; ++i) p[static_cast<std::size_t>(i * 3 + i)] = 1.0;
  const std::vector<double> x{0.5, -1.5, 2.0};
  EXPECT_EQ(mlp_forward(net, p, x), x);
}

TEST(Mlp, MatchesNaiveForward) {
  std::mt19937_64 rng(3);
  for (const auto& sizes : std::vector<std::vector<int>>{{4, 8, 3}, {2, 5, 5, 1}, {6, 1}}) {
    Mlp net(sizes);
    const auto p = random_params(net, rng);
    std::vector<double> x(static_cast<std::size_t>(sizes.front()));
    std::normal_distribution<double> n;
    for (auto& v : x) v = n(rng);
    const auto got = mlp_forward(net, p, x);
    const auto want = naive_forward(sizes, p, x);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Mlp net({3, 6, 4, 2});
    const auto p = random_params(net, rng);
    const std::vector<double> x{0.3, -0.7, 1.1};
    const std::vector<double> up{0.8, -1.3};
    const auto analytic = mlp_gradient(net, p, x, up);
    const auto numeric = testing::central_differences(
        [&](const std::vector<double>& q) {
          const auto y = mlp_forward(net, q, x);
          return y[0] * up[0] + y[1] * up[1];
        },
        p, 0, p.size());
    EXPECT_LE(testing::relative_error(analytic, numeric), 1e-6);
  }
}

TEST(Mlp, GradientIsLinearInUpstream) {
  std::mt19937_64 rng(12);
  Mlp net({2, 4, 3});
  const auto p = random_params(net, rng);
  const std::vector<double> x{0.1, 0.2};
  const auto zero = mlp_gradient(net, p, x, std::vector<double>{0.0, 0.0, 0.0});
  EXPECT_TRUE(std::all_of(zero.begin(), zero.end(), [](double g) { return g == 0.0; }));
  const auto g1 = mlp_gradient(net, p, x, std::vector<double>{1.0, -0.5, 0.25});
  const auto g2 = mlp_gradient(net, p, x, std::vector<double>{2.0, -1.0, 0.5});
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g2[i], 2.0 * g1[i], 1e-12);
}

TEST(Mlp, ShapeMismatchThrows) {
  Mlp net({2, 3});
  EXPECT_THROW(mlp_forward(net, std::vector<double>(net.param_count() + 1), std::vector<double>{1.0, 2.0}),
               ShapeMismatch);
  EXPECT_THROW(mlp_forward(net, std::vector<double>(net.param_count()), std::vector<double>{1.0}), ShapeMismatch);
}

TEST(SquashedGaussian, LogProbIntegratesToOne) {
  for (const auto bounds : {SquashBounds{-1.0, 1.0}, SquashBounds{-2.0, 3.0}}) {
    for (const auto& [mu, ls] : std::vector<std::pair<double, double>>{{0.0, 0.0}, {0.7, -0.5}, {-1.2, 0.4}}) {
      // Midpoint rule in the pre-squash variable: a = c + h*tanh(u), da = h*(1 - tanh^2) du.
      const int n = 200000;
      const double lo = -12.0, hi = 12.0, du = (hi - lo) / n;
      double mass = 0.0;
      for (int k = 0; k < n; ++k) {
        const double u = lo + (k + 0.5) * du;
        const double t = std::tanh(u);
        const double a = bounds.center() + bounds.half() * t;
        if (!(a > bounds.low && a < bounds.high)) continue;
        mass += std::exp(squashed_log_prob({mu}, {ls}, {a}, bounds)) * bounds.half() * (1.0 - t * t) * du;
      }
      EXPECT_NEAR(mass, 1.0, 1e-3) << mu << " " << ls;
    }
  }
}

TEST(SquashedGaussian, LogProbMatchesChangeOfVariables) {
  const double mu = 0.3, ls = -0.2, sigma = std::exp(ls);
  for (double a : {-0.9, -0.2, 0.0, 0.5, 0.95}) {
    const double u = std::atanh(a);
    const double normal = std::exp(-0.5 * ((u - mu) / sigma) * ((u - mu) / sigma)) / (sigma * std::sqrt(2 * M_PI));
    EXPECT_NEAR(squashed_log_prob({mu}, {ls}, {a}, {}), std::log(normal / (1.0 - a * a)), 1e-9);
  }
}

TEST(SquashedGaussian, SmallSigmaGivesModeAndSamplesStayInBounds) {
  std::mt19937_64 rng(5);
  const auto [a, logp] = gaussian_policy_sample({0.4, -30.0}, SquashBounds{-2.0, 2.0}, rng);
  EXPECT_NEAR(a[0], 2.0 * std::tanh(0.4), 1e-6);
  EXPECT_TRUE(std::isfinite(logp));
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const auto [b, lp] = gaussian_policy_sample({n(rng), n(rng), n(rng), n(rng)}, SquashBounds{-1.0, 0.5}, rng);
    for (double v : b) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 0.5);
    }
  }
}

TEST(AllreduceMean, SymmetricAndFixedPoint) {
  const GradVector g{"p", 3, {1.0, -2.0, 0.5}};
  GradVector neg = g;
  for (auto& v : neg.values) v = -v;
  const std::vector<GradVector> pair{g, neg};
  EXPECT_EQ(allreduce_mean(pair).values, (std::vector<double>{0.0, 0.0, 0.0}));
  const std::vector<GradVector> same(5, GradVector{"p", 3, {0.1, 0.7, 1e-300}});
  EXPECT_EQ(allreduce_mean(same), same.front());
}

TEST(AllreduceMean, MatchesSerialMeanAndIgnoresOrder) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  std::vector<GradVector> grads;
  for (int w = 0; w < 8; ++w) {
    GradVector g{"p", 0, std::vector<double>(50)};
    for (auto& v : g.values) v = n(rng);
    grads.push_back(g);
  }
  const auto mean = allreduce_mean(grads);
  for (std::size_t i = 0; i < 50; ++i) {
    double s = 0.0;
    for (const auto& g : grads) s += g.values[i];
    EXPECT_NEAR(mean.values[i], s / 8.0, 1e-15);
  }
  for (int k = 0; k < 10; ++k) {
    std::shuffle(grads.begin(), grads.end(), rng);
    EXPECT_EQ(allreduce_mean(grads), mean);
  }
}

TEST(AllreduceMean, RejectsMismatchedContributions) {
  const std::vector<GradVector> versions{{"p", 1, {1.0}}, {"p", 2, {1.0}}};
  EXPECT_THROW(allreduce_mean(versions), VersionMismatch);
  const std::vector<GradVector> lengths{{"p", 1, {1.0}}, {"p", 1, {1.0, 2.0}}};
  EXPECT_THROW(allreduce_mean(lengths), LengthMismatchError);
}

TEST(Polyak, ContractsTowardOnline) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> target(20), online(20);
    for (auto& v : target) v = n(rng);
    for (auto& v : online) v = n(rng);
    const auto old = target;
    const double tau = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    polyak_update(target, online, tau);
    double moved = 0.0, gap = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      moved += (target[i] - old[i]) * (target[i] - old[i]);
      gap += (online[i] - old[i]) * (online[i] - old[i]);
    }
    EXPECT_LE(std::sqrt(moved), tau * std::sqrt(gap) * (1 + 1e-12));
  }
}

TEST(GradientSuite, SacCritic) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LE(testing::sac_critic_error(1, s, false), 1e-4) << s;
}

TEST(GradientSuite, SacActor) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LE(testing::sac_actor_error(1, s, false), 1e-4) << s;
}

TEST(GradientSuite, MasacCommonCritic) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LE(testing::sac_critic_error(3, s, true), 1e-4) << s;
}

TEST(GradientSuite, MasacActors) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LE(testing::sac_actor_error(3, s, true), 1e-4) << s;
}

TEST(GradientSuite, PpoDiscrete) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LE(testing::ppo_error(true, s), 1e-4) << s;
}

TEST(GradientSuite, PpoBox) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LE(testing::ppo_error(false, s), 1e-4) << s;
}

TEST(SacCritic, ZeroDiscountIgnoresTargets) {
  auto inst = testing::sac_instance(1, 1);
  inst.cfg.gamma = 0.0;
  const double before = sac_critic_loss(inst.model, inst.model.params(), inst.batch, inst.noise, inst.cfg, {});
  for (auto& t : inst.model.target()) t += 1.0;
  EXPECT_EQ(sac_critic_loss(inst.model, inst.model.params(), inst.batch, inst.noise, inst.cfg, {}), before);
}

TEST(SacCritic, SharedRewardGivesSameTargetAsMean) {
  auto inst = testing::sac_instance(3, 2);
  for (Eigen::Index c = 0; c < inst.batch.reward.cols(); ++c)
    inst.batch.reward.col(c).setConstant(inst.batch.reward(0, c));
  const double shared = masac_critic_loss(inst.model, inst.model.params(), inst.batch, inst.noise, inst.cfg, {});
  auto permuted = inst;
  permuted.batch.reward.row(0).swap(permuted.batch.reward.row(2));
  EXPECT_EQ(masac_critic_loss(permuted.model, permuted.model.params(), permuted.batch, permuted.noise, permuted.cfg, {}),
            shared);
}

TEST(Masac, SingleAgentMatchesSacBitExactly) {
  SacConfig cfg;
  cfg.batch = 32;
  cfg.warmup = 100;
  cfg.actor_hidden = {16, 16};
  cfg.critic_hidden = {16, 16};
  SacLearner sac(1, 4, 2, {}, cfg, false, 17, 23);
  SacLearner masac(1, 4, 2, {}, cfg, true, 17, 23);
  testing::fill_replay(sac, 5);
  testing::fill_replay(masac, 5);
  ASSERT_EQ(sac.model().params(), masac.model().params());
  for (int k = 0; k < 25; ++k) {
    const auto a = sac_update(sac, identity_reduce);
    const auto b = masac_update(masac, identity_reduce);
    EXPECT_EQ(a.critic, b.critic);
    EXPECT_EQ(a.actor, b.actor);
  }
  EXPECT_EQ(sac.model().params(), masac.model().params());
  EXPECT_EQ(sac.model().target(), masac.model().target());
}

TEST(Masac, RequiresCommonCritic) {
  SacLearner sac(1, 4, 2, {}, SacConfig{}, false, 1, 2);
  EXPECT_THROW(masac_update(sac, identity_reduce), NotGrouped);
  EXPECT_THROW(SacLearner(3, 4, 2, {}, SacConfig{}, false, 1, 2), NotGrouped);
}

TEST(Sac, UpdateNeedsWarmReplay) {
  SacConfig cfg;
  cfg.batch = 8;
  cfg.warmup = 10;
  SacLearner l(1, 4, 2, {}, cfg, false, 1, 2);
  EXPECT_THROW(sac_update(l, identity_reduce), InsufficientData);
}

TEST(Sac, ReducedGradientKeepsMembersInLockStep) {
  SacConfig cfg;
  cfg.batch = 16;
  cfg.warmup = 16;
  cfg.actor_hidden = {8};
  cfg.critic_hidden = {8};
  SacLearner a(1, 4, 2, {}, cfg, false, 9, 100);
  SacLearner b(1, 4, 2, {}, cfg, false, 9, 200);
  testing::fill_replay(a, 1);
  testing::fill_replay(b, 2);
  for (int k = 0; k < 10; ++k) {
    const std::vector<GradVector> both{a.compute_gradient(), b.compute_gradient()};
    const auto mean = allreduce_mean(both);
    a.apply_gradient(mean);
    b.apply_gradient(mean);
  }
  EXPECT_EQ(a.model().params(), b.model().params());
  EXPECT_EQ(a.version(), 10u);
}

TEST(Gae, MatchesHandComputation) {
  TrajectoryBuffer buf;
  buf.reward = {1.0, 0.0, 2.0, 1.0};
  buf.value = {0.5, 0.2, -0.1, 0.3};
  buf.done = {0.0, 1.0, 0.0, 0.0};
  buf.bootstrap = {0.0, 0.4, 0.0, 0.0};
  buf.logp.assign(4, 0.0);
  const double g = 0.9, l = 0.8, last = 0.6;
  std::vector<double> adv, ret;
  compute_gae(buf, last, g, l, adv, ret);
  const double d3 = 1.0 + g * last - 0.3;
  const double d2 = 2.0 + g * 0.3 - (-0.1);
  const double d1 = 0.0 + g * 0.4 - 0.2;
  const double d0 = 1.0 + g * 0.2 - 0.5;
  const std::vector<double> want{d0 + g * l * d1, d1, d2 + g * l * d3, d3};
  ASSERT_EQ(adv.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(adv[i], want[i], 1e-12) << i;
    EXPECT_NEAR(ret[i], want[i] + buf.value[i], 1e-12) << i;
  }
}

TEST(Ppo, ZeroAdvantageLeavesPolicyUntouched) {
  auto inst = testing::ppo_instance(true, 3);
  inst.batch.advantage.setZero();
  inst.cfg.ent_coef = 0.0;
  std::vector<double> grad(inst.model.params().size(), 0.0);
  ppo_loss(inst.model, inst.model.params(), inst.batch, inst.cfg, grad);
  for (std::size_t i = 0; i < inst.model.value_offset(); ++i) EXPECT_EQ(grad[i], 0.0);
}

TEST(Ppo, RatioOneGivesVanillaPolicyGradient) {
  auto inst = testing::ppo_instance(false, 4);
  inst.cfg.ent_coef = 0.0;
  inst.cfg.vf_coef = 0.0;
  auto& b = inst.batch;
  b.logp_old = ppo_log_prob(inst.model, inst.model.params(), b.obs, b.act);
  std::vector<double> grad(inst.model.params().size(), 0.0);
  ppo_loss(inst.model, inst.model.params(), b, inst.cfg, grad);
  const auto vanilla = testing::central_differences(
      [&](const std::vector<double>& p) {
        const RowVector lp = ppo_log_prob(inst.model, p, b.obs, b.act);
        return -(lp.array() * b.advantage.array()).sum() / static_cast<double>(b.obs.cols());
      },
      inst.model.params(), 0, inst.model.value_offset());
  EXPECT_LE(testing::relative_error(
                std::vector<double>(grad.begin(), grad.begin() + static_cast<std::ptrdiff_t>(inst.model.value_offset())),
                vanilla),
            1e-6);
}

TEST(Ppo, UpdateOnEmptyBufferThrows) {
  PpoLearner l(4, SpaceSpec::discrete(2), PpoConfig{}, 1, 2);
  EXPECT_THROW(ppo_update(l, identity_reduce), EmptyBuffer);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Checkpoint c{"pol", "sac", 42, {3, 4, 8, 2}, {0.1, -0.0, 1e-310, std::numeric_limits<double>::infinity(), 7.5}};
  EXPECT_EQ(decode_checkpoint(encode_checkpoint(c), "sac"), c);
  const auto path = std::filesystem::temp_directory_path() / "arena_ckpt_roundtrip.ckpt";
  save_checkpoint(path, c);
  EXPECT_EQ(load_checkpoint(path), c);
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptionAndAlgorithmMismatchRejected) {
  const Checkpoint c{"pol", "ppo", 1, {2, 2, 1}, {1.0, 2.0, 3.0}};
  auto bytes = encode_checkpoint(c);
  EXPECT_THROW(decode_checkpoint(bytes, "sac"), CorruptCheckpoint);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_checkpoint(truncated), CorruptCheckpoint);
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xff;
  EXPECT_THROW(decode_checkpoint(bad_magic), CorruptCheckpoint);
  EXPECT_THROW(decode_checkpoint(std::vector<std::uint8_t>{}), CorruptCheckpoint);
}

std::vector<EntitySpec> box_entities(int n) {
  std::vector<EntitySpec> out;
  for (int i = 0; i < n; ++i)
    out.push_back({static_cast<std::uint32_t>(i), SpaceSpec::box({4}, -10.0, 10.0), SpaceSpec::box({2}, -1.0, 1.0)});
  return out;
}

TEST(Checkpoint, AgentsRestoreEveryAlgorithm) {
  for (const std::string alg : {"sac", "masac", "ppo"}) {
    AgentOptions opt;
    opt.policy = "p";
    opt.algorithm = alg;
    opt.init_seed = 3;
    const auto specs = box_entities(alg == "masac" ? 3 : 1);
    auto a = make_agent(opt, specs);
    opt.init_seed = 4;
    auto b = make_agent(opt, specs);
    const auto ca = a->checkpoint();
    ASSERT_TRUE(ca.has_value());
    EXPECT_EQ(ca->algorithm, alg);
    EXPECT_NE(b->checkpoint()->payload, ca->payload);
    b->restore(*ca);
    EXPECT_EQ(b->checkpoint()->payload, ca->payload);
    EXPECT_EQ(decode_checkpoint(encode_checkpoint(*ca), alg), *ca);
  }
}

TEST(Checkpoint, RestoreRejectsOtherAlgorithm) {
  AgentOptions opt;
  opt.policy = "p";
  opt.algorithm = "sac";
  auto sac = make_agent(opt, box_entities(1));
  opt.algorithm = "ppo";
  auto ppo = make_agent(opt, box_entities(1));
  EXPECT_THROW(ppo->restore(*sac->checkpoint()), CorruptCheckpoint);
}

TEST(Scripted, StaticAndRandom) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(scripted_act(ScriptKind::Static, SpaceSpec::box({2}, -1.0, 1.0), rng), Value{Tensor::vector({0.0, 0.0})});
  for (int i = 0; i < 200; ++i) {
    const auto v = std::get<std::int64_t>(scripted_act(ScriptKind::Random, SpaceSpec::discrete(4), rng));
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 3);
  }
  std::mt19937_64 r1(9), r2(9);
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ(scripted_act(ScriptKind::Random, SpaceSpec::box({3}, -2.0, 2.0), r1),
              scripted_act(ScriptKind::Random, SpaceSpec::box({3}, -2.0, 2.0), r2));
}

TEST(Replay, RingOverwritesOldest) {
  ReplayBuffer r(3, 1, 1, 1);
  for (int t = 0; t < 5; ++t) {
    const std::vector<double> v{double(t)};
    r.add(v, v, v, v, false);
  }
  EXPECT_EQ(r.size(), 3u);
  const auto oldest = r.gather(std::vector<std::size_t>{r.slot_of(0)});
  EXPECT_EQ(oldest.obs(0, 0), 2.0);
}

}  // namespace
}  // namespace arena::learn
