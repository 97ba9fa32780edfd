#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arena/envs/params.hpp"
#include "arena/routing/plan.hpp"
#include "arena/runtime/comm.hpp"

namespace arena::orch {

/// Worker node configuration carried in the node descriptor.
struct WorkerNodeConfig {
  std::uint32_t worker_id = 0;
  std::uint32_t env_id = 0;
  rt::NodeId env_node = 0;
  std::string policy;
  routing::PolicySpec policy_spec;
  std::string env_kind;
  EnvParams env_params;
  routing::EntityAssignment assignment;
  int frameskip = 1;
  std::uint64_t init_seed = 0;
  std::uint64_t worker_seed = 0;
  /// Checkpoint to resume a trainable policy from; empty for a fresh start.
  std::string restore_path;
  std::uint32_t round = 0;
  std::uint64_t step_offset = 0;
  /// Emit an update row every this many gradient steps (0: never).
  std::uint32_t update_log_every = 0;
  /// Policy group for gradient collectives; empty for frozen and scripted policies.
  std::string policy_group;
  bool emit_checkpoint = false;
};

Bytes encode_worker_config(const WorkerNodeConfig& c);
WorkerNodeConfig decode_worker_config(std::span<const std::uint8_t> bytes);

/// True when the worker's entities are presented to its algorithm through the combined adapter
/// (single-agent algorithms on a grouped assignment).
bool uses_combined_adapter(const routing::PolicySpec& policy, const routing::EntityAssignment& assignment);

rt::Task<void> worker_node_main(rt::Comm& comm, WorkerNodeConfig config);

}  // namespace arena::orch
