#include <benchmark/benchmark.h>

#include "arena/envs/registry.hpp"
#include "arena/orchestrator/round.hpp"
#include "arena/routing/plan.hpp"
#include "arena/runtime/collective.hpp"

namespace {

using namespace arena;

void BM_CoopNavStep(benchmark::State& state) {
  auto env = envs::make_env("coopnav", {});
  env->reset(1);
  const std::vector<Value> actions(3, Tensor::vector({0.3, -0.2}));
  for (auto _ : state) {
    const auto b = env->step(actions);
    if (b.done) env->reset(2);
    benchmark::DoNotOptimize(b);
  }
}
BENCHMARK(BM_CoopNavStep);

void BM_CollectiveGroup(benchmark::State& state) {
  const auto members = static_cast<rt::NodeId>(state.range(0));
  std::set<rt::NodeId> ids;
  for (rt::NodeId i = 0; i < members; ++i) ids.insert(i);
  const learn::GradVector g{"p", 0, std::vector<double>(20000, 0.5)};
  for (auto _ : state) {
    rt::CollectiveGroup group(ids);
    std::optional<rt::CollectiveResult> done;
    for (rt::NodeId i = 0; i < members; ++i) done = group.contribute(i, g);
    benchmark::DoNotOptimize(done);
  }
}
BENCHMARK(BM_CollectiveGroup)->Arg(3)->Arg(8);

/// Env/worker exchanges per second with scripted policies: measures the transport and the
/// step protocol without learning.
void BM_ScriptedRound(benchmark::State& state) {
  const auto transport = static_cast<rt::TransportMode>(state.range(0));
  routing::MatchSpec spec;
  spec.policies["s"] = routing::PolicySpec{learn::PolicyMode::Scripted, "random", {}, {}};
  spec.matches.push_back({"echo", {{"n_entities", 2.0}, {"horizon", 100.0}},
                          {{"s", routing::EntityAssignment::single(0), 1}, {"s", routing::EntityAssignment::single(1), 1}}});
  spec.replication = 4;
  const auto plan = routing::resolve_plan(spec);
  orch::RunOptions options;
  options.transport = transport;
  const std::uint64_t budget = 20000;
  for (auto _ : state) benchmark::DoNotOptimize(orch::run_round(plan, orch::RoundConfig{budget, 0, {}}, options));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(budget));
  state.SetLabel(rt::transport_name(transport));
}
BENCHMARK(BM_ScriptedRound)
    ->Arg(static_cast<int>(rt::TransportMode::Deterministic))
    ->Arg(static_cast<int>(rt::TransportMode::Multiprocess))
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
