#pragma once

#include <optional>
#include <vector>

#include "arena/interface/step_batch.hpp"

namespace arena::orch {

/// Worker -> env: one entry per controlled entity, in assignment order. A null entry asks the
/// environment to substitute the canonical null action.
struct ActionMessage {
  std::vector<std::optional<Value>> actions;
  bool operator==(const ActionMessage&) const = default;
};

/// Env -> worker: the worker's slice of an exchange. The first message of a round carries the
/// reset observations (empty rewards). A done reply carries the terminal observations and, unless
/// the round is over, the observations of the freshly reset episode.
struct EnvReply {
  bool is_reset = false;
  bool round_over = false;
  StepBatch batch;
  std::optional<StepBatch> next_reset;
  bool operator==(const EnvReply&) const = default;
};

Bytes encode_actions(const ActionMessage& m);
ActionMessage decode_actions(std::span<const std::uint8_t> bytes);

Bytes encode_reply(const EnvReply& r);
EnvReply decode_reply(std::span<const std::uint8_t> bytes);

}  // namespace arena::orch
