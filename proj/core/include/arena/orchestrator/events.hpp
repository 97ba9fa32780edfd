#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "arena/common/bytes.hpp"
#include "arena/runtime/comm.hpp"

namespace arena::orch {

enum EventKind : std::uint32_t { kMetricsEvent = 1, kCheckpointEvent = 2 };

/// One metrics record: a finished episode, a logged update, or an environment summary.
struct MetricsRow {
  double wall_time = 0.0;
  std::uint32_t round = 0;
  std::string kind;  // episode | update | env
  std::string policy;
  std::optional<std::uint32_t> worker;
  std::optional<std::uint32_t> env;
  std::uint64_t env_steps = 0;
  std::uint64_t grad_steps = 0;
  std::optional<double> episode_return;
  std::optional<double> loss_policy;
  std::optional<double> loss_value;
  std::optional<double> entropy;
  std::string env_config;
  bool operator==(const MetricsRow&) const = default;
};

struct CheckpointEvent {
  std::string policy;
  std::uint32_t worker = 0;
  Bytes checkpoint;
};

rt::NodeEvent make_event(const MetricsRow& row);
rt::NodeEvent make_event(const CheckpointEvent& ckpt);
MetricsRow decode_metrics(const rt::NodeEvent& e);
CheckpointEvent decode_checkpoint_event(const rt::NodeEvent& e);

}  // namespace arena::orch
