#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arena/envs/params.hpp"
#include "arena/interface/env.hpp"
#include "arena/orchestrator/messages.hpp"
#include "arena/runtime/comm.hpp"

namespace arena::orch {

class MissingWorkerMessage : public Error {
 public:
  explicit MissingWorkerMessage(std::uint32_t worker)
      : Error("no action message from worker " + std::to_string(worker)), worker_(worker) {}
  std::uint32_t worker() const { return worker_; }

 private:
  std::uint32_t worker_;
};

class MalformedAction : public Error {
 public:
  MalformedAction(std::uint32_t entity, const std::string& why)
      : Error("malformed action for entity " + std::to_string(entity) + ": " + why), entity_(entity) {}
  std::uint32_t entity() const { return entity_; }

 private:
  std::uint32_t entity_;
};

struct WorkerSlot {
  std::uint32_t worker_id = 0;
  std::vector<std::uint32_t> entities;
};

struct ServeResult {
  StepBatch batch;               // the full exchange, entity-id order
  std::vector<StepBatch> slices;  // per worker, in its assignment order
};

/// Assembles one action list from the workers' messages (null entries become canonical null
/// actions), steps the environment once and slices the result per worker.
ServeResult env_serve_step(MultiEntityEnv& env, const std::vector<WorkerSlot>& slots,
                           const std::vector<std::optional<Bytes>>& messages);

/// Per-worker slice of a batch.
StepBatch slice_batch(const StepBatch& batch, const std::vector<std::uint32_t>& entities);

std::uint64_t episode_seed(std::uint64_t env_seed, std::uint64_t episode);

/// Environment node configuration carried in the node descriptor.
struct EnvNodeConfig {
  std::uint32_t env_id = 0;
  std::string kind;
  EnvParams params;
  std::uint64_t env_seed = 0;
  /// The node keeps stepping until it has executed this many steps and an episode has ended.
  std::uint64_t step_share = 1;
  std::uint32_t round = 0;
  std::uint64_t step_offset = 0;
  std::vector<WorkerSlot> slots;
  std::vector<rt::NodeId> worker_nodes;  // parallel to slots
};

Bytes encode_env_config(const EnvNodeConfig& c);
EnvNodeConfig decode_env_config(std::span<const std::uint8_t> bytes);

rt::Task<void> env_node_main(rt::Comm& comm, EnvNodeConfig config);

}  // namespace arena::orch
