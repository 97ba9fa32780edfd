#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arena/common/error.hpp"
#include "arena/orchestrator/round.hpp"

namespace arena::schemes {

class MissingScore : public Error {
 public:
  explicit MissingScore(std::string member)
      : Error("no score for population member '" + member + "'"), member_(std::move(member)) {}
  const std::string& member() const { return member_; }

 private:
  std::string member_;
};

struct LineageEntry {
  std::uint32_t generation = 0;
  std::string member;
  double score = 0.0;
  bool selected = false;
  bool operator==(const LineageEntry&) const = default;
};

struct PopulationState {
  std::vector<std::string> members;
  std::uint32_t generation = 0;
  /// Every member's score in every finished generation, winners and losers alike.
  std::vector<LineageEntry> lineage;
};

struct CopyInstruction {
  std::string from;
  std::string to;
  bool operator==(const CopyInstruction&) const = default;
};

struct Selection {
  std::size_t winner = 0;
  std::vector<CopyInstruction> copies;
};

/// Picks the best-scoring member (lowest index on ties), records the generation in the lineage
/// and returns instructions to overwrite every other member with the winner.
Selection evolve_generation(PopulationState& population, const std::map<std::string, double>& scores);

/// Mean of the final quarter (rounded up) of a generation's episode scores; none without episodes.
std::optional<double> selection_score(const std::vector<double>& episode_returns);

/// ceil(total / period) rounds of `period` steps; the last round takes the remainder.
std::vector<orch::RoundConfig> generation_schedule(std::uint64_t total_steps, std::uint64_t generation_period);

/// Copies the winner's checkpoint file byte for byte over each loser's.
void apply_copies(const std::vector<CopyInstruction>& copies,
                  const std::function<std::filesystem::path(const std::string&)>& checkpoint_path);

/// CSV with columns generation,member,score,selected.
void write_lineage(const std::filesystem::path& path, const std::vector<LineageEntry>& lineage);
std::vector<LineageEntry> read_lineage(const std::filesystem::path& path);

/// Hooks that score the members after each round, select, copy checkpoints and rewrite the
/// lineage file. `on_selection` runs after the copies.
orch::RoundHooks evolution_hooks(PopulationState& population, const orch::Orchestrator& orchestrator,
                                 std::filesystem::path lineage_path,
                                 std::function<void(const Selection&)> on_selection = {});

}  // namespace arena::schemes
