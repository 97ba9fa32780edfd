#pragma once

#include <map>
#include <sys/types.h>

#include "arena/runtime/comm.hpp"

namespace arena::rt {

/// Runs every node in its own forked process. Nodes that share an env group are connected by a
/// socket pair; each node also has a control socket to the parent, which serves as the hub for
/// policy-group collectives and the sink for events. Exchanges time out after `timeout_seconds`.
///
/// Setting ARENA_LOG_DIR redirects each child's stderr to <dir>/node_<id>.log.
class MultiprocessRuntime : public Runtime {
 public:
  explicit MultiprocessRuntime(double timeout_seconds = 60.0) : timeout_(timeout_seconds) {}
  ~MultiprocessRuntime() override;

  void run(const std::vector<NodeDescriptor>& nodes, const NodeMain& main, const EventSink& sink) override;
  std::size_t live_nodes() const override { return registry_.size(); }
  /// Process ids of the last run, for external orphan checks.
  const std::vector<pid_t>& last_pids() const { return last_pids_; }

 private:
  void kill_all();

  double timeout_;
  std::map<NodeId, pid_t> registry_;
  std::vector<pid_t> last_pids_;
};

}  // namespace arena::rt
