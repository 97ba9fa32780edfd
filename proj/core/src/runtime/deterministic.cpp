#include "arena/runtime/deterministic.hpp"

#include <deque>
#include <map>
#include <sstream>

#include "arena/runtime/collective.hpp"

namespace arena::rt {

namespace {

struct Scheduler;

struct Waiting {
  enum class What { Nothing, Message, Collective } what = What::Nothing;
  NodeId from = 0;
  std::string group;
  std::coroutine_handle<> handle;
};

struct NodeState {
  NodeDescriptor desc;
  Task<void> task;
  Waiting waiting;
  bool finished = false;
  // Result slot filled when a collective completes.
  std::optional<learn::GradVector> reduced;
  std::uint8_t error_kind = 0;
  std::string error;
};

class DetComm;

struct Scheduler {
  std::map<NodeId, NodeState> nodes;
  std::map<std::pair<NodeId, NodeId>, std::deque<Bytes>> mailboxes;  // (from, to)
  std::map<std::string, CollectiveGroup> groups;
  std::deque<std::pair<NodeId, std::coroutine_handle<>>> ready;
  const EventSink* sink = nullptr;
  std::uint64_t tick = 0;

  void wake(NodeId id) {
    auto& n = nodes.at(id);
    ready.emplace_back(id, n.waiting.handle);
    n.waiting = Waiting{};
  }

  void finish_collective(const CollectiveResult& r) {
    for (NodeId m : r.members) {
      auto& n = nodes.at(m);
      n.reduced = r.mean;
      n.error_kind = r.error_kind;
      n.error = r.error;
      wake(m);
    }
  }

  void leave(NodeId id, const std::string& group) {
    auto it = groups.find(group);
    if (it == groups.end()) return;
    if (auto r = it->second.leave(id)) finish_collective(*r);
  }
};

struct RecvAwaiter {
  Scheduler* s;
  NodeId self;
  NodeId from;
  bool await_ready() const { return !s->mailboxes[{from, self}].empty(); }
  void await_suspend(std::coroutine_handle<> h) {
    s->nodes.at(self).waiting = Waiting{Waiting::What::Message, from, {}, h};
  }
  Bytes await_resume() {
    auto& box = s->mailboxes[{from, self}];
    Bytes m = std::move(box.front());
    box.pop_front();
    return m;
  }
};

struct CollectiveAwaiter {
  Scheduler* s;
  NodeId self;
  // Points into the calling frame; GCC 11 relocates awaiter temporaries bitwise, which breaks
  // members with small-buffer storage.
  const std::string* group;
  learn::GradVector* local;
  bool await_ready() const { return false; }
  void await_suspend(std::coroutine_handle<> h) {
    s->nodes.at(self).waiting = Waiting{Waiting::What::Collective, 0, *group, h};
    auto it = s->groups.find(*group);
    if (it == s->groups.end()) throw ProtocolViolation("node " + std::to_string(self) + " is not in group " + *group);
    if (auto r = it->second.contribute(self, std::move(*local))) s->finish_collective(*r);
  }
  learn::GradVector await_resume() {
    auto& n = s->nodes.at(self);
    if (!n.reduced) throw_collective_error(n.error_kind, n.error);
    learn::GradVector g = std::move(*n.reduced);
    n.reduced.reset();
    return g;
  }
};

class DetComm : public Comm {
 public:
  DetComm(Scheduler& s, NodeId self) : s_(s), self_(self) {}

  NodeId self() const override { return self_; }

  void send(NodeId to, Bytes message) override {
    auto it = s_.nodes.find(to);
    if (it == s_.nodes.end() || !share_group(s_.nodes.at(self_).desc, it->second.desc))
      throw ProtocolViolation("node " + std::to_string(self_) + " may not message node " + std::to_string(to));
    s_.mailboxes[{self_, to}].push_back(std::move(message));
    auto& w = it->second.waiting;
    if (w.what == Waiting::What::Message && w.from == self_) s_.wake(to);
  }

  Task<Bytes> recv(NodeId from) override { co_return co_await RecvAwaiter{&s_, self_, from}; }

  Task<learn::GradVector> allreduce_mean(const std::string& group, learn::GradVector local) override {
    const std::string name = group;
    learn::GradVector mine = std::move(local);
    co_return co_await CollectiveAwaiter{&s_, self_, &name, &mine};
  }

  void leave_group(const std::string& group) override { s_.leave(self_, group); }

  void post(NodeEvent event) override { (*s_.sink)(self_, event); }

  double clock() const override { return static_cast<double>(s_.tick); }

 private:
  Scheduler& s_;
  NodeId self_;
};

std::string describe_blocked(const Scheduler& s) {
  std::ostringstream out;
  out << "deadlock:";
  for (const auto& [id, n] : s.nodes) {
    if (n.finished) continue;
    out << " node " << id;
    if (n.waiting.what == Waiting::What::Message) out << " waits for a message from node " << n.waiting.from << ";";
    else if (n.waiting.what == Waiting::What::Collective) out << " waits in collective " << n.waiting.group << ";";
    else out << " is idle;";
  }
  return out.str();
}

}  // namespace

void DeterministicRuntime::run(const std::vector<NodeDescriptor>& nodes, const NodeMain& main, const EventSink& sink) {
  Scheduler s;
  s.sink = &sink;
  s.groups = collective_groups(nodes);
  std::map<NodeId, std::unique_ptr<DetComm>> comms;
  for (const auto& d : nodes) {
    auto [it, inserted] = s.nodes.try_emplace(d.id);
    if (!inserted) throw ProtocolViolation("duplicate node id " + std::to_string(d.id));
    it->second.desc = decode_descriptor(encode_descriptor(d));
  }
  live_ = s.nodes.size();
  struct Reset {
    std::size_t& live;
    ~Reset() { live = 0; }
  } reset{live_};

  for (auto& [id, n] : s.nodes) {
    comms[id] = std::make_unique<DetComm>(s, id);
    n.task = main(*comms[id], n.desc);
    s.ready.emplace_back(id, n.task.handle());
  }

  std::size_t remaining = s.nodes.size();
  while (!s.ready.empty()) {
    auto [id, h] = s.ready.front();
    s.ready.pop_front();
    ++s.tick;
    h.resume();
    auto& n = s.nodes.at(id);
    if (!n.finished && n.task.done()) {
      n.finished = true;
      --remaining;
      try {
        n.task.result();
      } catch (const std::exception& e) {
        throw NodeCrash(id, e.what());
      }
      for (const auto& g : n.desc.groups)
        if (g.kind == GroupKind::Policy) s.leave(id, g.name);
    }
  }
  if (remaining != 0) throw Timeout(0, describe_blocked(s));
}

}  // namespace arena::rt
