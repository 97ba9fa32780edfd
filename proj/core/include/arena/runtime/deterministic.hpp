#pragma once

#include "arena/runtime/comm.hpp"

namespace arena::rt {

/// Runs every node as a coroutine on the calling thread. Ready nodes are resumed round-robin in
/// FIFO order, so a run is a pure function of its inputs. A state where no node can make progress
/// is reported as a Timeout naming what each blocked node waits for.
class DeterministicRuntime : public Runtime {
 public:
  void run(const std::vector<NodeDescriptor>& nodes, const NodeMain& main, const EventSink& sink) override;
  std::size_t live_nodes() const override { return live_; }

 private:
  std::size_t live_ = 0;
};

}  // namespace arena::rt
