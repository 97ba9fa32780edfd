#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "arena/cli/config.hpp"

namespace arena::cli {

struct EvalOptions {
  /// Trainable policies are loaded from <checkpoint_dir>/<policy>.ckpt.
  std::filesystem::path checkpoint_dir;
  int episodes = 10;
  std::uint64_t seed = 0;
  /// Match entry of the configuration to roll out (before replication).
  std::size_t match = 0;
  /// CSV episode,t,entity,pos_x,pos_y,reward; one row per entity after every step.
  std::filesystem::path trace_path;
  /// CSV episode,target,pos_x,pos_y for environments with fixed targets.
  std::filesystem::path targets_path;
};

struct EvalResult {
  /// Per policy, one score per (episode, slot): the mean over the slot's entities of their returns.
  std::map<std::string, std::vector<double>> returns;
  std::uint64_t steps = 0;
  std::uint64_t trace_rows = 0;
};

/// Rolls out one match in-process with every learned policy acting deterministically.
EvalResult evaluate(const RunConfig& config, const EvalOptions& options);

}  // namespace arena::cli
