#include "arena/runtime/multiprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>

#include "arena/runtime/collective.hpp"

namespace arena::rt {

namespace {

enum : std::uint8_t { kAllreduce = 1, kLeave = 2, kEvent = 3, kDone = 4, kFailed = 5 };
enum : std::uint8_t { kFailGeneric = 0, kFailTimeout = 1, kFailPeer = 2 };

class IoError : public Error {
 public:
  using Error::Error;
};

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("write failed: ") + std::strerror(errno));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

void write_frame(int fd, const Bytes& payload) {
  std::uint8_t len[4];
  const auto n = static_cast<std::uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) len[i] = static_cast<std::uint8_t>(n >> (8 * i));
  write_all(fd, len, 4);
  write_all(fd, payload.data(), payload.size());
}

/// Waits up to `timeout_ms` (negative: forever) for `fd` to become readable.
bool wait_readable(int fd, int timeout_ms) {
  pollfd p{fd, POLLIN, 0};
  for (;;) {
    const int r = ::poll(&p, 1, timeout_ms);
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw IoError(std::string("poll failed: ") + std::strerror(errno));
    return r > 0;
  }
}

/// Returns false on a clean end of stream before the first byte.
bool read_all(int fd, std::uint8_t* data, std::size_t n, bool allow_eof) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::read(fd, data + got, n - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("read failed: ") + std::strerror(errno));
    }
    if (r == 0) {
      if (got == 0 && allow_eof) return false;
      throw IoError("peer closed the connection mid-frame");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

std::optional<Bytes> read_frame(int fd) {
  std::uint8_t len[4];
  if (!read_all(fd, len, 4, true)) return std::nullopt;
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(len[i]) << (8 * i);
  Bytes payload(n);
  read_all(fd, payload.data(), n, false);
  return payload;
}

void write_grad(ByteWriter& w, const learn::GradVector& g) {
  w.str(g.policy);
  w.u64(g.version);
  w.u64(g.values.size());
  w.f64s(g.values);
}

learn::GradVector read_grad(ByteReader& r) {
  learn::GradVector g;
  g.policy = r.str();
  g.version = r.u64();
  const auto n = r.u64();
  if (n > r.remaining() / 8) throw DecodeError("gradient frame truncated");
  g.values = r.f64s(static_cast<std::size_t>(n));
  return g;
}

using Clock = std::chrono::steady_clock;

class ProcComm : public Comm {
 public:
  ProcComm(NodeId self, int control, std::map<NodeId, int> peers, int timeout_ms, Clock::time_point start)
      : self_(self), control_(control), peers_(std::move(peers)), timeout_ms_(timeout_ms), start_(start) {}

  NodeId self() const override { return self_; }

  void send(NodeId to, Bytes message) override { write_frame(peer(to), message); }

  Task<Bytes> recv(NodeId from) override {
    const int fd = peer(from);
    if (!wait_readable(fd, timeout_ms_))
      throw Timeout(self_, "node " + std::to_string(self_) + " timed out waiting for node " + std::to_string(from));
    auto frame = read_frame(fd);
    if (!frame) throw IoError("node " + std::to_string(from) + " closed its connection");
    co_return std::move(*frame);
  }

  Task<learn::GradVector> allreduce_mean(const std::string& group, learn::GradVector local) override {
    ByteWriter w;
    w.u8(kAllreduce);
    w.str(group);
    write_grad(w, local);
    write_frame(control_, w.bytes());
    if (!wait_readable(control_, timeout_ms_))
      throw Timeout(self_, "node " + std::to_string(self_) + " timed out in collective " + group);
    auto frame = read_frame(control_);
    if (!frame) throw IoError("driver closed the control connection");
    ByteReader r(*frame);
    const auto status = r.u8();
    if (status != 0) throw_collective_error(status, r.str());
    co_return read_grad(r);
  }

  void leave_group(const std::string& group) override {
    ByteWriter w;
    w.u8(kLeave);
    w.str(group);
    write_frame(control_, w.bytes());
  }

  void post(NodeEvent event) override {
    ByteWriter w;
    w.u8(kEvent);
    w.u32(event.kind);
    w.blob(event.payload);
    write_frame(control_, w.bytes());
  }

  double clock() const override { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  int peer(NodeId id) const {
    auto it = peers_.find(id);
    if (it == peers_.end())
      throw ProtocolViolation("node " + std::to_string(self_) + " may not message node " + std::to_string(id));
    return it->second;
  }

  NodeId self_;
  int control_;
  std::map<NodeId, int> peers_;
  int timeout_ms_;
  Clock::time_point start_;
};

[[noreturn]] void child_main(const NodeDescriptor& desc, const NodeMain& main, int control, std::map<NodeId, int> peers,
                             int timeout_ms, Clock::time_point start) {
  ::signal(SIGPIPE, SIG_IGN);
  if (const char* dir = std::getenv("ARENA_LOG_DIR"); dir && *dir) {
    const auto path = std::filesystem::path(dir) / ("node_" + std::to_string(desc.id) + ".log");
    if (std::FILE* f = std::freopen(path.c_str(), "a", stderr)) (void)f;
  }
  auto fail = [&](std::uint8_t kind, const std::string& what) {
    try {
      ByteWriter w;
      w.u8(kFailed);
      w.u8(kind);
      w.str(what);
      write_frame(control, w.bytes());
    } catch (...) {
    }
    std::fflush(stderr);
    ::_exit(1);
  };
  try {
    ProcComm comm(desc.id, control, std::move(peers), timeout_ms, start);
    const NodeDescriptor own = decode_descriptor(encode_descriptor(desc));
    sync_wait(main(comm, own));
    ByteWriter w;
    w.u8(kDone);
    write_frame(control, w.bytes());
  } catch (const Timeout& e) {
    fail(kFailTimeout, e.what());
  } catch (const IoError& e) {
    fail(kFailPeer, e.what());
  } catch (const std::exception& e) {
    fail(kFailGeneric, e.what());
  } catch (...) {
    fail(kFailGeneric, "unknown exception");
  }
  std::fflush(stderr);
  ::_exit(0);
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

MultiprocessRuntime::~MultiprocessRuntime() { kill_all(); }

void MultiprocessRuntime::kill_all() {
  for (auto& [id, pid] : registry_) ::kill(pid, SIGKILL);
  for (auto& [id, pid] : registry_) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
  }
  registry_.clear();
}

void MultiprocessRuntime::run(const std::vector<NodeDescriptor>& nodes, const NodeMain& main, const EventSink& sink) {
  if (!registry_.empty()) throw ProtocolViolation("runtime is already running");
  last_pids_.clear();
  const int timeout_ms = timeout_ > 0 ? static_cast<int>(timeout_ * 1000.0) : -1;
  const auto start = Clock::now();
  auto groups = collective_groups(nodes);

  // Socket pairs: one control channel per node, one link per pair of nodes sharing a group.
  struct Link {
    NodeId a, b;
    int fa, fb;
  };
  std::vector<Link> links;
  std::map<NodeId, int> parent_end;
  std::map<NodeId, int> child_end;
  std::vector<int> all_fds;
  auto make_pair = [&](int& x, int& y) {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
      throw IoError(std::string("socketpair failed: ") + std::strerror(errno));
    x = sv[0];
    y = sv[1];
    all_fds.push_back(x);
    all_fds.push_back(y);
  };
  auto close_all = [&] {
    for (int& fd : all_fds) close_fd(fd);
  };
  try {
    std::set<NodeId> seen;
    for (const auto& d : nodes) {
      if (!seen.insert(d.id).second) throw ProtocolViolation("duplicate node id " + std::to_string(d.id));
      make_pair(parent_end[d.id], child_end[d.id]);
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = i + 1; j < nodes.size(); ++j)
        if (share_group(nodes[i], nodes[j])) {
          Link l{nodes[i].id, nodes[j].id, -1, -1};
          make_pair(l.fa, l.fb);
          links.push_back(l);
        }
  } catch (...) {
    close_all();
    throw;
  }

  std::cout.flush();
  std::cerr.flush();
  std::fflush(nullptr);
  for (const auto& d : nodes) {
    const pid_t pid = ::fork();
    if (pid < 0) {
      kill_all();
      close_all();
      throw IoError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
      std::map<NodeId, int> peers;
      std::set<int> keep{child_end.at(d.id)};
      for (const auto& l : links) {
        if (l.a == d.id) peers[l.b] = l.fa, keep.insert(l.fa);
        if (l.b == d.id) peers[l.a] = l.fb, keep.insert(l.fb);
      }
      for (int fd : all_fds)
        if (!keep.count(fd)) ::close(fd);
      child_main(d, main, child_end.at(d.id), std::move(peers), timeout_ms, start);
    }
    registry_[d.id] = pid;
    last_pids_.push_back(pid);
  }
  // The parent only keeps its control ends.
  for (auto& [id, fd] : child_end) close_fd(fd);
  for (auto& l : links) {
    close_fd(l.fa);
    close_fd(l.fb);
  }

  std::map<NodeId, int> open = parent_end;
  std::set<NodeId> done;
  // A node that lost a peer connection only reports the consequence of another node's failure;
  // it is surfaced only if no node reports a root cause.
  std::optional<NodeCrash> secondary;
  std::set<NodeId> lost_peer;
  auto fail = [&](auto&& error) {
    kill_all();
    for (auto& [id, fd] : parent_end) close_fd(fd);
    throw error;
  };
  auto reply = [&](const CollectiveResult& r) {
    ByteWriter w;
    if (r.mean) {
      w.u8(0);
      write_grad(w, *r.mean);
    } else {
      w.u8(r.error_kind);
      w.str(r.error);
    }
    for (NodeId m : r.members) write_frame(parent_end.at(m), w.bytes());
  };
  auto leave_all = [&](NodeId id) {
    for (auto& [name, g] : groups)
      if (auto r = g.leave(id)) reply(*r);
  };

  while (!open.empty()) {
    std::vector<pollfd> fds;
    std::vector<NodeId> ids;
    for (const auto& [id, fd] : open) {
      fds.push_back(pollfd{fd, POLLIN, 0});
      ids.push_back(id);
    }
    const int r = ::poll(fds.data(), fds.size(), -1);
    if (r < 0) {
      if (errno == EINTR) continue;
      fail(IoError(std::string("poll failed: ") + std::strerror(errno)));
    }
    for (std::size_t k = 0; k < fds.size(); ++k) {
      if (!(fds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const NodeId id = ids[k];
      std::optional<Bytes> frame;
      try {
        frame = read_frame(fds[k].fd);
      } catch (const Error& e) {
        fail(NodeCrash(id, e.what()));
      }
      if (!frame) {
        open.erase(id);
        if (!done.count(id)) {
          int status = 0;
          ::waitpid(registry_.at(id), &status, 0);
          registry_.erase(id);
          if (lost_peer.count(id)) continue;
          std::string why = WIFSIGNALED(status) ? "killed by signal " + std::to_string(WTERMSIG(status))
                                                : "exited with status " + std::to_string(WEXITSTATUS(status));
          fail(NodeCrash(id, why + " before finishing"));
        }
        continue;
      }
      try {
        ByteReader in(*frame);
        switch (in.u8()) {
          case kAllreduce: {
            const std::string group = in.str();
            auto it = groups.find(group);
            if (it == groups.end()) fail(NodeCrash(id, "collective on unknown group " + group));
            if (auto res = it->second.contribute(id, read_grad(in))) reply(*res);
            break;
          }
          case kLeave: {
            auto it = groups.find(in.str());
            if (it != groups.end())
              if (auto res = it->second.leave(id)) reply(*res);
            break;
          }
          case kEvent: {
            NodeEvent e;
            e.kind = in.u32();
            e.payload = in.blob();
            sink(id, e);
            break;
          }
          case kDone:
            done.insert(id);
            leave_all(id);
            break;
          case kFailed: {
            const auto kind = in.u8();
            const std::string what = in.str();
            if (kind == kFailTimeout) fail(Timeout(id, what));
            if (kind == kFailPeer) {
              if (!secondary) secondary.emplace(id, what);
              lost_peer.insert(id);
              leave_all(id);
              break;
            }
            fail(NodeCrash(id, what));
            break;
          }
          default:
            fail(NodeCrash(id, "malformed control frame"));
        }
      } catch (const DecodeError& e) {
        fail(NodeCrash(id, e.what()));
      } catch (const ProtocolViolation& e) {
        fail(NodeCrash(id, e.what()));
      }
    }
  }

  if (secondary) fail(*secondary);
  for (auto& [id, fd] : parent_end) close_fd(fd);
  std::string bad;
  NodeId bad_id = 0;
  for (auto& [id, pid] : registry_) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (bad.empty() && !(WIFEXITED(status) && WEXITSTATUS(status) == 0)) {
      bad = "exited abnormally";
      bad_id = id;
    }
  }
  registry_.clear();
  if (!bad.empty()) throw NodeCrash(bad_id, bad);
}

}  // namespace arena::rt
