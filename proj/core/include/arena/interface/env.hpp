#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "arena/interface/step_batch.hpp"

namespace arena {

class StepAfterDone : public Error {
 public:
  StepAfterDone() : Error("step called after the episode ended") {}
};

/// Multi-entity environment: a list of actions in, lists of results out, one shared done.
/// An instance is owned by a single execution context.
class MultiEntityEnv {
 public:
  virtual ~MultiEntityEnv() = default;

  virtual const std::vector<EntitySpec>& entities() const = 0;
  virtual std::vector<Value> reset(std::uint64_t episode_seed) = 0;
  /// `actions` is indexed by entity id and must already conform to each act_space.
  virtual StepBatch step(std::span<const Value> actions) = 0;

  std::size_t entity_count() const { return entities().size(); }
};

}  // namespace arena
