#include "arena/orchestrator/views.hpp"

#include <algorithm>
#include <limits>

#include "arena/learners/vectors.hpp"

namespace arena::orch {

GroupView::GroupView(rt::Comm& comm, rt::NodeId env_node, std::vector<EntitySpec> specs)
    : comm_(comm), env_(env_node), specs_(std::move(specs)) {}

rt::Task<std::vector<Value>> GroupView::reset() {
  switch (state_) {
    case State::Fresh: {
      const EnvReply rep = decode_reply(co_await comm_.recv(env_));
      if (!rep.is_reset) throw rt::ProtocolViolation("expected the initial observations of the round");
      if (rep.batch.size() != specs_.size()) throw rt::ProtocolViolation("reset reply has the wrong entity count");
      infos_ = rep.batch.infos;
      state_ = State::Running;
      co_return rep.batch.observations;
    }
    case State::AfterDone: {
      if (!next_reset_) throw rt::ProtocolViolation("the round is over; no further episodes");
      StepBatch b = std::move(*next_reset_);
      next_reset_.reset();
      infos_ = std::move(b.infos);
      state_ = State::Running;
      co_return std::move(b.observations);
    }
    case State::Running:
      break;
  }
  throw rt::ProtocolViolation("reset called mid-episode; lock-step environments reset only after done");
}

rt::Task<ViewStep> GroupView::step(std::vector<Value> actions) {
  if (state_ != State::Running) throw rt::ProtocolViolation("step called before reset");
  if (actions.size() != specs_.size())
    throw learn::LengthMismatchError("expected " + std::to_string(specs_.size()) + " actions, got " +
                                     std::to_string(actions.size()));
  ActionMessage msg;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    const auto it = infos_[k].find(kExitedKey);
    if (it != infos_[k].end() && it->second == "true") msg.actions.emplace_back(std::nullopt);
    else msg.actions.emplace_back(std::move(actions[k]));
  }
  comm_.send(env_, encode_actions(msg));
  EnvReply rep = decode_reply(co_await comm_.recv(env_));
  if (rep.is_reset || rep.batch.size() != specs_.size()) throw rt::ProtocolViolation("malformed step reply");
  ++exchanges_;
  infos_ = rep.batch.infos;
  if (rep.batch.done) {
    state_ = State::AfterDone;
    next_reset_ = std::move(rep.next_reset);
    round_over_ = rep.round_over;
  }
  ViewStep out;
  out.entity_rewards = rep.batch.rewards;
  out.obs = std::move(rep.batch.observations);
  out.rewards = std::move(rep.batch.rewards);
  out.done = rep.batch.done;
  out.infos = std::move(rep.batch.infos);
  co_return out;
}

ProxyEnv::ProxyEnv(EntityView& inner) : inner_(inner) {
  if (inner_.specs().size() != 1) throw rt::ProtocolViolation("a proxy environment wraps exactly one entity");
}

rt::Task<Value> ProxyEnv::reset() {
  auto obs = co_await inner_.reset();
  co_return std::move(obs.front());
}

rt::Task<ProxyStep> ProxyEnv::step(Value action) {
  std::vector<Value> a;
  a.push_back(std::move(action));
  ViewStep r = co_await inner_.step(std::move(a));
  co_return ProxyStep{std::move(r.obs.front()), r.rewards.front(), r.done, std::move(r.infos.front())};
}

namespace {

std::pair<double, double> value_range(const SpaceSpec& s) {
  if (s.is_box()) return {s.as_box().low, s.as_box().high};
  return {0.0, static_cast<double>(s.as_discrete().n - 1)};
}

}  // namespace

CombinedEntityAdapter::CombinedEntityAdapter(EntityView& inner) : inner_(inner) {
  const auto& in = inner_.specs();
  if (in.empty()) throw Error("combined adapter needs at least one entity");
  double olo = std::numeric_limits<double>::infinity(), ohi = -olo;
  std::size_t obs_size = 0, act_size = 0;
  for (const auto& s : in) {
    if (!s.act_space.is_box()) throw Error("combined adapter needs box action spaces, got " + s.act_space.describe());
    const auto& a = s.act_space.as_box();
    const auto& a0 = in.front().act_space;
    if (!a0.is_box() || a.low != a0.as_box().low || a.high != a0.as_box().high)
      throw Error("combined adapter needs action boxes with identical bounds");
    const auto [lo, hi] = value_range(s.obs_space);
    olo = std::min(olo, lo);
    ohi = std::max(ohi, hi);
    obs_size += s.obs_space.flat_size();
    act_size += s.act_space.flat_size();
  }
  const auto& a0 = in.front().act_space.as_box();
  specs_.push_back(EntitySpec{0, SpaceSpec::box({static_cast<std::uint32_t>(obs_size)}, olo, ohi),
                              SpaceSpec::box({static_cast<std::uint32_t>(act_size)}, a0.low, a0.high)});
}

std::vector<Value> CombinedEntityAdapter::combine(const std::vector<Value>& per_entity) const {
  std::vector<double> joint;
  for (const auto& v : per_entity) {
    const auto f = flatten(v);
    joint.insert(joint.end(), f.begin(), f.end());
  }
  std::vector<Value> out;
  out.emplace_back(Tensor::vector(std::move(joint)));
  return out;
}

std::vector<Value> CombinedEntityAdapter::split(const Value& joint_action) const {
  const auto flat = flatten(joint_action);
  std::vector<Value> out;
  std::size_t at = 0;
  for (const auto& s : inner_.specs()) {
    const std::size_t n = s.act_space.flat_size();
    if (at + n > flat.size()) throw learn::LengthMismatchError("combined action is too short");
    Tensor t;
    t.shape = s.act_space.as_box().shape;
    t.data.assign(flat.begin() + static_cast<std::ptrdiff_t>(at), flat.begin() + static_cast<std::ptrdiff_t>(at + n));
    out.emplace_back(std::move(t));
    at += n;
  }
  if (at != flat.size()) throw learn::LengthMismatchError("combined action is too long");
  return out;
}

Info CombinedEntityAdapter::merge(const std::vector<Info>& infos) const {
  Info out;
  bool all_exited = !infos.empty();
  for (const auto& info : infos) {
    const auto it = info.find(kExitedKey);
    all_exited = all_exited && it != info.end() && it->second == "true";
    for (const auto& [k, v] : info)
      if (k != kExitedKey) out.emplace(k, v);
  }
  if (all_exited) out[kExitedKey] = "true";
  return out;
}

rt::Task<std::vector<Value>> CombinedEntityAdapter::reset() {
  const auto obs = co_await inner_.reset();
  infos_ = {merge(inner_.infos())};
  co_return combine(obs);
}

rt::Task<ViewStep> CombinedEntityAdapter::step(std::vector<Value> actions) {
  if (actions.size() != 1) throw learn::LengthMismatchError("combined adapter expects one joint action");
  ViewStep r = co_await inner_.step(split(actions.front()));
  ViewStep out;
  out.obs = combine(r.obs);
  double total = 0.0;
  for (double x : r.rewards) total += x;
  out.rewards = {total};
  out.done = r.done;
  infos_ = {merge(r.infos)};
  out.infos = infos_;
  out.entity_rewards = std::move(r.entity_rewards);
  co_return out;
}

FrameSkip::FrameSkip(EntityView& inner, int k) : inner_(inner), k_(k) {
  if (k < 1) throw Error("frame skip interval must be >= 1");
}

rt::Task<ViewStep> FrameSkip::step(std::vector<Value> actions) {
  ViewStep total;
  last_exchanges_ = 0;
  for (int i = 0; i < k_; ++i) {
    ViewStep r = co_await inner_.step(actions);
    ++last_exchanges_;
    if (total.rewards.empty()) {
      total.rewards.assign(r.rewards.size(), 0.0);
      total.entity_rewards.assign(r.entity_rewards.size(), 0.0);
    }
    for (std::size_t j = 0; j < r.rewards.size(); ++j) total.rewards[j] += r.rewards[j];
    for (std::size_t j = 0; j < r.entity_rewards.size(); ++j) total.entity_rewards[j] += r.entity_rewards[j];
    total.obs = std::move(r.obs);
    total.infos = std::move(r.infos);
    total.done = r.done;
    if (r.done) break;
  }
  co_return total;
}

}  // namespace arena::orch
