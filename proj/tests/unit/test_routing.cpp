#include <gtest/gtest.h>

#include <set>

#include "arena/routing/plan.hpp"

namespace arena::routing {
namespace {

MatchSpec round_robin_spec() {
  MatchSpec spec;
  const std::vector<std::string> names{"a", "b", "c", "d"};
  for (const auto& n : names) spec.policies[n] = PolicySpec{learn::PolicyMode::Trainable, "ppo", {}, {}};
  spec.matches = round_robin_pairings(names, 2, "echo", {{"n_entities", 4.0}});
  return spec;
}

MatchSpec grouped_spec(int entries) {
  MatchSpec spec;
  spec.policies["P"] = PolicySpec{learn::PolicyMode::Trainable, "masac", {}, {}};
  for (int i = 0; i < entries; ++i)
    spec.matches.push_back({"coopnav", {}, {{"P", EntityAssignment::group({0, 1, 2}), 1}}});
  return spec;
}

void expect_partition(const ProcessPlan& plan, std::uint32_t entities) {
  for (const auto& env : plan.envs) {
    std::multiset<std::uint32_t> seen;
    for (auto w : plan.env_groups.at(env.env_id))
      for (auto e : plan.workers[w].assignment.entities) seen.insert(e);
    std::multiset<std::uint32_t> want;
    for (std::uint32_t e = 0; e < entities; ++e) want.insert(e);
    EXPECT_EQ(seen, want);
  }
}

TEST(ResolvePlan, RoundRobinBringsUpThirtyNodes) {
  const auto plan = resolve_plan(round_robin_spec());
  EXPECT_EQ(plan.envs.size(), 6u);
  EXPECT_EQ(plan.workers.size(), 24u);
  EXPECT_EQ(plan.node_count(), 30u);
  for (const auto& [name, members] : plan.policy_groups) EXPECT_EQ(members.size(), 6u) << name;
  expect_partition(plan, 4);
  EXPECT_NE(plan_summary(plan).find("nodes: 30 (6 env, 24 worker)"), std::string::npos);
}

TEST(ResolvePlan, GroupedCoopNav) {
  const auto plan = resolve_plan(grouped_spec(8));
  EXPECT_EQ(plan.envs.size(), 8u);
  EXPECT_EQ(plan.workers.size(), 8u);
  EXPECT_EQ(plan.policy_groups.at("P").size(), 8u);
  expect_partition(plan, 3);
  EXPECT_NE(plan_summary(plan).find("policy P: 8 workers (grouped, 3 entities each)"), std::string::npos);
}

TEST(ResolvePlan, SingleEntitySingleWorker) {
  MatchSpec spec;
  spec.policies["p"] = PolicySpec{learn::PolicyMode::Trainable, "ppo", {}, {}};
  spec.matches.push_back({"cartpole", {}, {{"p", EntityAssignment::single(0), 1}}});
  const auto plan = resolve_plan(spec);
  EXPECT_EQ(plan.envs.size(), 1u);
  EXPECT_EQ(plan.workers.size(), 1u);
}

TEST(ResolvePlan, IndependentWorkersPerEntity) {
  MatchSpec spec;
  spec.policies["S"] = PolicySpec{learn::PolicyMode::Trainable, "sac", {}, {}};
  for (int i = 0; i < 6; ++i)
    spec.matches.push_back({"coopnav",
                            {},
                            {{"S", EntityAssignment::single(0), 1},
                             {"S", EntityAssignment::single(1), 1},
                             {"S", EntityAssignment::single(2), 1}}});
  const auto plan = resolve_plan(spec);
  EXPECT_EQ(plan.envs.size(), 6u);
  EXPECT_EQ(plan.workers.size(), 18u);
  EXPECT_EQ(plan.policy_groups.at("S").size(), 18u);
  expect_partition(plan, 3);
}

TEST(ResolvePlan, MixedAssignmentsCoverEveryEntity) {
  MatchSpec spec;
  spec.policies["x"] = PolicySpec{learn::PolicyMode::Scripted, "static", {}, {}};
  spec.policies["y"] = PolicySpec{learn::PolicyMode::Scripted, "random", {}, {}};
  const EnvParams echo{{"n_entities", 3.0}};
  spec.matches.push_back({"echo", echo, {{"x", EntityAssignment::group({0, 1, 2}), 1}}});
  spec.matches.push_back({"echo", echo, {{"x", EntityAssignment::group({0, 2}), 1}, {"y", EntityAssignment::single(1), 1}}});
  spec.matches.push_back(
      {"echo", echo,
       {{"x", EntityAssignment::single(0), 1}, {"y", EntityAssignment::single(1), 1}, {"x", EntityAssignment::single(2), 1}}});
  const auto plan = resolve_plan(spec);
  EXPECT_EQ(plan.workers.size(), 6u);
  expect_partition(plan, 3);
}

TEST(ResolvePlan, Errors) {
  auto spec = grouped_spec(1);
  spec.matches[0].slots[0].policy = "Q";
  EXPECT_THROW(resolve_plan(spec), UnknownPolicy);

  spec = grouped_spec(1);
  spec.matches[0].slots[0].assignment = EntityAssignment::group({0, 1});
  try {
    resolve_plan(spec);
    FAIL();
  } catch (const IncompleteCoverage& e) {
    EXPECT_EQ(e.missing(), std::vector<std::uint32_t>{2});
  }

  spec = grouped_spec(1);
  spec.matches[0].slots.push_back({"P", EntityAssignment::group({1}), 1});
  EXPECT_THROW(resolve_plan(spec), DuplicateEntity);
}

TEST(ResolvePlan, IsPure) { EXPECT_EQ(resolve_plan(round_robin_spec()), resolve_plan(round_robin_spec())); }

TEST(Replicate, ScalesNodeCount) {
  const auto spec = round_robin_spec();
  const auto three = replicate(spec, 3);
  EXPECT_EQ(three.envs.size(), 18u);
  EXPECT_EQ(three.workers.size(), 72u);
  EXPECT_EQ(three.node_count(), 90u);
  for (const auto& [name, members] : three.policy_groups) EXPECT_EQ(members.size(), 18u);
  for (int n = 1; n <= 4; ++n) EXPECT_EQ(replicate(spec, n).node_count(), n * replicate(spec, 1).node_count());
  EXPECT_EQ(replicate(spec, 1), resolve_plan(spec));
}

TEST(Replicate, MatchesExplicitEntries) {
  EXPECT_EQ(replicate(grouped_spec(1), 8), resolve_plan(grouped_spec(8)));
  EXPECT_EQ(replicate(resolve_plan(grouped_spec(1)), 8), resolve_plan(grouped_spec(8)));
}

TEST(RoundRobin, PairCounts) {
  EXPECT_EQ(round_robin_pairings({"a", "b", "c", "d"}, 2, "echo", {}).size(), 6u);
  EXPECT_EQ(round_robin_pairings({"a", "b"}, 1, "echo", {}).size(), 1u);
  EXPECT_THROW(round_robin_pairings({"a"}, 1, "echo", {}), TooFewPolicies);
}

TEST(RoundRobin, FivePoliciesEnumerateAllPairsInOrder) {
  const std::vector<std::string> names{"p0", "p1", "p2", "p3", "p4"};
  const auto entries = round_robin_pairings(names, 1, "echo", {});
  std::vector<std::pair<std::string, std::string>> want;
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) want.emplace_back(names[i], names[j]);
  ASSERT_EQ(entries.size(), want.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    ASSERT_EQ(entries[k].slots.size(), 2u);
    EXPECT_EQ(entries[k].slots[0].policy, want[k].first);
    EXPECT_EQ(entries[k].slots[1].policy, want[k].second);
    EXPECT_EQ(entries[k].slots[0].assignment, EntityAssignment::single(0));
    EXPECT_EQ(entries[k].slots[1].assignment, EntityAssignment::single(1));
  }
}

}  // namespace
}  // namespace arena::routing
