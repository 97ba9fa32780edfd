#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "arena/cli/config.hpp"
#include "arena/orchestrator/round.hpp"
#include "arena/schemes/population.hpp"

namespace arena::cli {

struct TrainOptions {
  /// Forces the single-context deterministic transport.
  bool deterministic = false;
  /// Replaces the configured output directory.
  std::optional<std::filesystem::path> output_dir;
  std::function<void(const orch::RoundReport&)> on_round;
};

struct TrainResult {
  std::filesystem::path output_dir;
  std::vector<orch::RoundReport> reports;
  /// Set for evolution schedules.
  std::optional<schemes::PopulationState> population;
};

/// Output layout below the run directory.
struct RunFiles {
  std::filesystem::path root;
  std::filesystem::path effective_config() const { return root / "effective_config.json"; }
  std::filesystem::path metrics() const { return root / "metrics.csv"; }
  std::filesystem::path rounds() const { return root / "rounds.csv"; }
  std::filesystem::path lineage() const { return root / "lineage.csv"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
};

/// Runs every round of the configuration. Checkpoints left over in the output directory from a
/// previous run are removed first so that a run never resumes from foreign state.
TrainResult run_training(const RunConfig& config, const TrainOptions& options = {});

}  // namespace arena::cli
