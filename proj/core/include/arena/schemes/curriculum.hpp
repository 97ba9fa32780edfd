#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arena/common/error.hpp"
#include "arena/orchestrator/round.hpp"

namespace arena::schemes {

class IndexOutOfRange : public Error {
 public:
  IndexOutOfRange(std::size_t index, std::size_t size)
      : Error("round " + std::to_string(index) + " is outside a schedule of " + std::to_string(size) + " rounds"),
        index_(index),
        size_(size) {}
  std::size_t index() const { return index_; }
  std::size_t size() const { return size_; }

 private:
  std::size_t index_;
  std::size_t size_;
};

/// One environment parameter value per round.
struct CurriculumSchedule {
  std::string key;
  std::vector<double> values;

  /// Throws InvalidParams for an empty key, an empty sequence or non-finite values.
  void validate() const;
  std::size_t rounds() const { return values.size(); }
};

/// Collision penalty weight rising from 0 to 0.3 in steps of 0.05 over seven rounds.
CurriculumSchedule default_penalty_schedule();

double curriculum_weight(const CurriculumSchedule& schedule, std::size_t round_index);

/// One round per scheduled value, each with `steps_per_round` steps and the value injected as an
/// environment override.
std::vector<orch::RoundConfig> curriculum_rounds(const CurriculumSchedule& schedule, std::uint64_t steps_per_round);

}  // namespace arena::schemes
