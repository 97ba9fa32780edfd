#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "arena/common/bytes.hpp"
#include "arena/common/error.hpp"
#include "arena/learners/vectors.hpp"
#include "arena/runtime/task.hpp"

namespace arena::rt {

using NodeId = std::uint32_t;

enum class NodeRole : std::uint8_t { Env = 0, Worker = 1 };
enum class GroupKind : std::uint8_t { Env = 0, Policy = 1 };

struct GroupRef {
  std::string name;
  GroupKind kind = GroupKind::Env;
  bool operator==(const GroupRef&) const = default;
};

/// Everything a node needs to start: identity, group memberships, and an opaque config blob.
/// Both transports hand nodes the decoded form of the same serialized descriptor.
struct NodeDescriptor {
  NodeId id = 0;
  NodeRole role = NodeRole::Env;
  std::vector<GroupRef> groups;
  Bytes config;
  bool operator==(const NodeDescriptor&) const = default;
};

Bytes encode_descriptor(const NodeDescriptor& d);
NodeDescriptor decode_descriptor(std::span<const std::uint8_t> bytes);

/// Opaque telemetry record forwarded from a node to the driver.
struct NodeEvent {
  std::uint32_t kind = 0;
  Bytes payload;
};

class Timeout : public Error {
 public:
  Timeout(NodeId node, std::string what) : Error(std::move(what)), node_(node) {}
  NodeId node() const { return node_; }

 private:
  NodeId node_;
};

class NodeCrash : public Error {
 public:
  NodeCrash(NodeId node, const std::string& diagnostic)
      : Error("node " + std::to_string(node) + " crashed: " + diagnostic), node_(node), diagnostic_(diagnostic) {}
  NodeId node() const { return node_; }
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  NodeId node_;
  std::string diagnostic_;
};

class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

/// A node's handle on the transport. Point-to-point messages only flow between nodes that share
/// a group; collectives only run over policy groups.
class Comm {
 public:
  virtual ~Comm() = default;

  virtual NodeId self() const = 0;
  virtual void send(NodeId to, Bytes message) = 0;
  virtual Task<Bytes> recv(NodeId from) = 0;
  /// Mean over the members still in the group; the k-th call joins the k-th collective.
  virtual Task<learn::GradVector> allreduce_mean(const std::string& group, learn::GradVector local) = 0;
  virtual void leave_group(const std::string& group) = 0;
  virtual void post(NodeEvent event) = 0;
  /// Seconds since the run started (a logical tick count under the deterministic transport).
  virtual double clock() const = 0;
};

using NodeMain = std::function<Task<void>(Comm&, const NodeDescriptor&)>;
using EventSink = std::function<void(NodeId, const NodeEvent&)>;

enum class TransportMode { Deterministic, Multiprocess };

TransportMode parse_transport(const std::string& name);
std::string transport_name(TransportMode mode);

class Runtime {
 public:
  virtual ~Runtime() = default;
  /// Starts every node, relays events to `sink` until all nodes finish, then tears everything down.
  /// Throws NodeCrash / Timeout after tearing down the remaining nodes.
  virtual void run(const std::vector<NodeDescriptor>& nodes, const NodeMain& main, const EventSink& sink) = 0;
  /// Live nodes; empty whenever run() is not executing.
  virtual std::size_t live_nodes() const = 0;
};

std::unique_ptr<Runtime> make_runtime(TransportMode mode, double timeout_seconds = 60.0);

}  // namespace arena::rt
