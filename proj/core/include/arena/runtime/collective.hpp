#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arena/learners/vectors.hpp"
#include "arena/runtime/comm.hpp"

namespace arena::rt {

/// Outcome of one completed collective: the mean, or the reason it failed.
struct CollectiveResult {
  std::vector<NodeId> members;  // contributors, ascending
  std::optional<learn::GradVector> mean;
  /// 1 = version mismatch, 2 = length mismatch, 3 = other; 0 when `mean` is set.
  std::uint8_t error_kind = 0;
  std::string error;
};

/// Rethrows the typed error recorded in a failed collective.
[[noreturn]] void throw_collective_error(std::uint8_t kind, const std::string& message);

/// Bookkeeping for the synchronous mean collective of one policy group. A collective completes
/// once every member still in the group has contributed; members that left are not waited for.
class CollectiveGroup {
 public:
  explicit CollectiveGroup(std::set<NodeId> members) : active_(std::move(members)) {}

  std::optional<CollectiveResult> contribute(NodeId node, learn::GradVector local);
  std::optional<CollectiveResult> leave(NodeId node);

  const std::set<NodeId>& active() const { return active_; }
  const std::map<NodeId, learn::GradVector>& pending() const { return pending_; }

 private:
  std::optional<CollectiveResult> try_complete();

  std::set<NodeId> active_;
  std::map<NodeId, learn::GradVector> pending_;
};

/// Policy groups declared by a set of node descriptors.
std::map<std::string, CollectiveGroup> collective_groups(const std::vector<NodeDescriptor>& nodes);

/// True when the two nodes share an env group (the only groups that carry point-to-point messages).
bool share_group(const NodeDescriptor& a, const NodeDescriptor& b);

}  // namespace arena::rt
