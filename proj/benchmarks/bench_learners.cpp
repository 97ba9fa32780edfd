#include <benchmark/benchmark.h>

#include <random>

#include "arena/learners/mlp.hpp"
#include "arena/learners/ppo.hpp"
#include "arena/learners/sac.hpp"
#include "arena/learners/vectors.hpp"

namespace {

using namespace arena;
using namespace arena::learn;

void BM_MlpForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const Mlp net({48, 128, 128, 1});
  std::vector<double> params(net.param_count());
  std::mt19937_64 rng(1);
  net.init(params, rng);
  const Matrix x = Matrix::Random(48, batch);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(params, x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(64)->Arg(256);

void BM_MlpBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const Mlp net({48, 128, 128, 1});
  std::vector<double> params(net.param_count()), grad(net.param_count());
  std::mt19937_64 rng(1);
  net.init(params, rng);
  const Matrix x = Matrix::Random(48, batch);
  Mlp::Cache cache;
  net.forward(params, x, &cache);
  const Matrix up = Matrix::Ones(1, batch);
  Matrix input_grad;
  for (auto _ : state) {
    net.backward(params, cache, up, grad, &input_grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpBackward)->Arg(1)->Arg(64)->Arg(256);

/// One gradient step of SAC (agents = 1) or MASAC (agents = 3) on coop-nav sized data.
void BM_SacUpdate(benchmark::State& state) {
  const int agents = static_cast<int>(state.range(0));
  SacConfig cfg;
  cfg.batch = static_cast<int>(state.range(1));
  cfg.warmup = static_cast<std::size_t>(cfg.batch);
  SacLearner learner(agents, 14, 2, {-1.0, 1.0}, cfg, agents > 1, 1, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> o(agents * 14), a(agents * 2), r(agents);
  for (int i = 0; i < 2000; ++i) {
    for (auto& v : o) v = n(rng);
    for (auto& v : a) v = std::tanh(n(rng));
    for (auto& v : r) v = n(rng);
    learner.replay().add(o, a, r, o, false);
  }
  for (auto _ : state) {
    const auto losses = agents > 1 ? masac_update(learner, identity_reduce) : sac_update(learner, identity_reduce);
    benchmark::DoNotOptimize(losses);
  }
}
BENCHMARK(BM_SacUpdate)->Args({1, 64})->Args({3, 64})->Args({1, 256})->Args({3, 256})->Unit(benchmark::kMicrosecond);

void BM_PpoUpdate(benchmark::State& state) {
  PpoConfig cfg;
  cfg.horizon = 512;
  cfg.minibatch = 64;
  cfg.epochs = static_cast<int>(state.range(0));
  PpoLearner learner(4, SpaceSpec::discrete(2), cfg, 1, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> obs(4), next(4);
  for (auto _ : state) {
    state.PauseTiming();
    while (!learner.horizon_reached()) {
      for (auto& v : obs) v = n(rng);
      for (auto& v : next) v = n(rng);
      const auto step = learner.act(obs, false);
      learner.observe(obs, step, 1.0, false, false, next);
    }
    state.ResumeTiming();
    benchmark::DoNotOptimize(ppo_update(learner, identity_reduce));
  }
}
BENCHMARK(BM_PpoUpdate)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_AllreduceMean(benchmark::State& state) {
  const auto members = static_cast<std::size_t>(state.range(0));
  std::vector<GradVector> grads(members, GradVector{"p", 0, std::vector<double>(40000)});
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (auto& g : grads)
    for (auto& v : g.values) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(allreduce_mean(grads));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(members * 40000 * sizeof(double)));
}
BENCHMARK(BM_AllreduceMean)->Arg(2)->Arg(8)->Arg(18);

}  // namespace

BENCHMARK_MAIN();
