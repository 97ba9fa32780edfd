#include <gtest/gtest.h>

#include <signal.h>

#include <cerrno>

#include "arena/runtime/collective.hpp"
#include "arena/runtime/comm.hpp"
#include "arena/runtime/deterministic.hpp"
#include "arena/runtime/multiprocess.hpp"

namespace arena::rt {
namespace {

std::vector<NodeDescriptor> env_pair_and_group(int workers) {
  std::vector<NodeDescriptor> nodes;
  nodes.push_back({0, NodeRole::Env, {{"env_0", GroupKind::Env}}, {}});
  for (int w = 1; w <= workers; ++w)
    nodes.push_back({static_cast<NodeId>(w), NodeRole::Worker, {{"env_0", GroupKind::Env}, {"pol", GroupKind::Policy}}, {}});
  return nodes;
}

Bytes bytes_of(std::uint8_t v) { return Bytes{v}; }

class Transports : public ::testing::TestWithParam<TransportMode> {
 protected:
  std::unique_ptr<Runtime> runtime(double timeout = 60.0) { return make_runtime(GetParam(), timeout); }
};

TEST_P(Transports, PointToPointAndCollective) {
  auto rt = runtime();
  std::map<NodeId, std::vector<std::uint8_t>> got;
  std::map<NodeId, std::vector<double>> means;
  rt->run(
      env_pair_and_group(3),
      [](Comm& comm, const NodeDescriptor& d) -> Task<void> {
        if (d.id == 0) {
          std::uint8_t sum = 0;
          for (NodeId w = 1; w <= 3; ++w) sum = static_cast<std::uint8_t>(sum + (co_await comm.recv(w)).front());
          for (NodeId w = 1; w <= 3; ++w) comm.send(w, Bytes{sum});
          comm.post({7, Bytes{sum}});
          co_return;
        }
        comm.send(0, Bytes{static_cast<std::uint8_t>(d.id)});
        const Bytes reply = co_await comm.recv(0);
        learn::GradVector g{"pol", 0, {double(d.id), 2.0 * d.id}};
        const auto mean = co_await comm.allreduce_mean("pol", g);
        Bytes out = reply;
        for (double v : mean.values) out.push_back(static_cast<std::uint8_t>(v));
        comm.post({8, out});
      },
      [&](NodeId node, const NodeEvent& e) {
        if (e.kind == 7) got[node] = e.payload;
        if (e.kind == 8) means[node] = std::vector<double>(e.payload.begin(), e.payload.end());
      });
  EXPECT_EQ(got[0], bytes_of(6));
  for (NodeId w = 1; w <= 3; ++w) EXPECT_EQ(means[w], (std::vector<double>{6.0, 2.0, 4.0})) << w;
  EXPECT_EQ(rt->live_nodes(), 0u);
}

TEST_P(Transports, CrashIsReportedAndEverythingTornDown) {
  auto rt = runtime(5.0);
  try {
    rt->run(
        env_pair_and_group(2),
        [](Comm& comm, const NodeDescriptor& d) -> Task<void> {
          if (d.id == 2) throw std::runtime_error("boom");
          co_await comm.recv(d.id == 0 ? 1 : 0);
        },
        [](NodeId, const NodeEvent&) {});
    FAIL() << "expected NodeCrash";
  } catch (const NodeCrash& e) {
    EXPECT_EQ(e.node(), 2u);
    EXPECT_NE(e.diagnostic().find("boom"), std::string::npos);
  }
  EXPECT_EQ(rt->live_nodes(), 0u);
}

TEST_P(Transports, DeadlockBecomesTimeout) {
  auto rt = runtime(0.5);
  EXPECT_THROW(rt->run(
                   env_pair_and_group(1),
                   [](Comm& comm, const NodeDescriptor& d) -> Task<void> { co_await comm.recv(d.id == 0 ? 1 : 0); },
                   [](NodeId, const NodeEvent&) {}),
               Timeout);
  EXPECT_EQ(rt->live_nodes(), 0u);
}

TEST_P(Transports, MismatchedCollectiveFails) {
  auto rt = runtime(5.0);
  EXPECT_ANY_THROW(rt->run(
      env_pair_and_group(2),
      [](Comm& comm, const NodeDescriptor& d) -> Task<void> {
        if (d.id == 0) co_return;
        learn::GradVector g{"pol", d.id, {1.0}};
        co_await comm.allreduce_mean("pol", g);
      },
      [](NodeId, const NodeEvent&) {}));
  EXPECT_EQ(rt->live_nodes(), 0u);
}

INSTANTIATE_TEST_SUITE_P(Both, Transports,
                         ::testing::Values(TransportMode::Deterministic, TransportMode::Multiprocess),
                         [](const auto& info) { return transport_name(info.param); });

TEST(Multiprocess, NoProcessesSurviveARun) {
  MultiprocessRuntime rt(10.0);
  for (int round = 0; round < 3; ++round) {
    rt.run(
        env_pair_and_group(3),
        [](Comm& comm, const NodeDescriptor& d) -> Task<void> {
          if (d.id == 0) {
            for (NodeId w = 1; w <= 3; ++w) comm.send(w, Bytes{1});
          } else {
            co_await comm.recv(0);
          }
        },
        [](NodeId, const NodeEvent&) {});
    EXPECT_EQ(rt.live_nodes(), 0u);
    ASSERT_EQ(rt.last_pids().size(), 4u);
    for (pid_t pid : rt.last_pids()) {
      errno = 0;
      EXPECT_EQ(::kill(pid, 0), -1);
      EXPECT_EQ(errno, ESRCH);
    }
  }
}

TEST(Multiprocess, MessagesOutsideSharedGroupsAreRejected) {
  MultiprocessRuntime rt(5.0);
  std::vector<NodeDescriptor> nodes{{0, NodeRole::Env, {{"env_0", GroupKind::Env}}, {}},
                                    {1, NodeRole::Env, {{"env_1", GroupKind::Env}}, {}}};
  EXPECT_ANY_THROW(rt.run(
      nodes,
      [](Comm& comm, const NodeDescriptor& d) -> Task<void> {
        if (d.id == 0) comm.send(1, Bytes{1});
        co_return;
      },
      [](NodeId, const NodeEvent&) {}));
  EXPECT_EQ(rt.live_nodes(), 0u);
}

TEST(Descriptor, RoundTrip) {
  const NodeDescriptor d{12, NodeRole::Worker, {{"env_3", GroupKind::Env}, {"policy:a", GroupKind::Policy}}, {1, 2, 3}};
  EXPECT_EQ(decode_descriptor(encode_descriptor(d)), d);
}

TEST(CollectiveGroup, LeaversAreNotWaitedFor) {
  CollectiveGroup g({1, 2, 3});
  EXPECT_FALSE(g.contribute(1, {"p", 0, {3.0}}).has_value());
  EXPECT_FALSE(g.contribute(2, {"p", 0, {5.0}}).has_value());
  const auto done = g.leave(3);
  ASSERT_TRUE(done.has_value());
  ASSERT_TRUE(done->mean.has_value());
  EXPECT_EQ(done->mean->values, std::vector<double>{4.0});
  EXPECT_EQ(done->members, (std::vector<NodeId>{1, 2}));
}

TEST(Transport, ParseNames) {
  EXPECT_EQ(parse_transport("deterministic"), TransportMode::Deterministic);
  EXPECT_EQ(parse_transport("multiprocess"), TransportMode::Multiprocess);
  EXPECT_ANY_THROW(parse_transport("mpi"));
}

}  // namespace
}  // namespace arena::rt
