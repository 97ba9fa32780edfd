#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "arena/envs/params.hpp"
#include "arena/orchestrator/events.hpp"
#include "arena/routing/plan.hpp"
#include "arena/runtime/comm.hpp"

namespace arena::orch {

struct RoundConfig {
  /// Environment steps summed over all env nodes; each env runs ceil(budget / envs) steps and
  /// then finishes its current episode.
  std::uint64_t step_budget = 1;
  std::uint32_t round_index = 0;
  /// Applied on top of every env node's configuration for this round.
  EnvParams env_overrides;
};

struct RunOptions {
  std::uint64_t seed = 0;
  rt::TransportMode transport = rt::TransportMode::Deterministic;
  double timeout_seconds = 60.0;
  /// Where trainable policies are saved after each round and restored from before it.
  std::filesystem::path checkpoint_dir;
  std::uint32_t update_log_every = 0;
  std::function<void(const MetricsRow&)> on_row;
};

struct PolicyRound {
  double mean_score = 0.0;
  std::uint64_t episodes = 0;
  /// Episode scores ordered by (env steps, worker id).
  std::vector<double> episode_returns;
};

struct RoundReport {
  std::uint32_t round = 0;
  std::map<std::string, PolicyRound> policies;
  std::uint64_t steps = 0;
  std::vector<std::uint64_t> env_steps;  // per env node
  double wall_time = 0.0;
  std::map<std::string, std::filesystem::path> checkpoints;
  /// Every worker of each trainable policy finished with bit-identical parameters.
  bool members_consistent = true;
};

struct RoundHooks {
  std::function<void(RoundConfig&)> before;
  std::function<void(const RoundReport&)> after;
};

/// Runs rounds of a plan on a transport, carrying checkpoints and step counters across rounds.
class Orchestrator {
 public:
  Orchestrator(routing::ProcessPlan plan, RunOptions options);
  ~Orchestrator();

  RoundReport run_round(const RoundConfig& config);
  std::vector<RoundReport> run_rounds(std::vector<RoundConfig> schedule, const RoundHooks& hooks = {});

  const routing::ProcessPlan& plan() const { return plan_; }
  const rt::Runtime& runtime() const { return *runtime_; }
  rt::Runtime& runtime() { return *runtime_; }
  std::filesystem::path checkpoint_path(const std::string& policy) const;
  /// The node descriptors a round with this configuration would launch.
  std::vector<rt::NodeDescriptor> descriptors(const RoundConfig& config) const;

 private:
  routing::ProcessPlan plan_;
  RunOptions options_;
  std::unique_ptr<rt::Runtime> runtime_;
  std::vector<std::uint64_t> env_offsets_;
};

/// Single round with a fresh orchestrator.
RoundReport run_round(const routing::ProcessPlan& plan, const RoundConfig& config, const RunOptions& options);

/// Dispatches a node descriptor to the env or worker main routine.
rt::Task<void> node_main(rt::Comm& comm, const rt::NodeDescriptor& desc);

}  // namespace arena::orch
