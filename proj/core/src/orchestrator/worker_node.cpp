#include "arena/orchestrator/worker_node.hpp"

#include <memory>
#include <optional>

#include "arena/envs/registry.hpp"
#include "arena/learners/agent.hpp"
#include "arena/orchestrator/events.hpp"
#include "arena/orchestrator/views.hpp"

namespace arena::orch {

Bytes encode_worker_config(const WorkerNodeConfig& c) {
  ByteWriter w;
  w.u32(c.worker_id);
  w.u32(c.env_id);
  w.u32(c.env_node);
  w.str(c.policy);
  w.u8(static_cast<std::uint8_t>(c.policy_spec.mode));
  w.str(c.policy_spec.algorithm);
  write_params(w, c.policy_spec.hyper);
  w.str(c.policy_spec.checkpoint);
  w.str(c.env_kind);
  write_params(w, c.env_params);
  w.u8(c.assignment.grouped ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(c.assignment.entities.size()));
  for (std::uint32_t e : c.assignment.entities) w.u32(e);
  w.u32(static_cast<std::uint32_t>(c.frameskip));
  w.u64(c.init_seed);
  w.u64(c.worker_seed);
  w.str(c.restore_path);
  w.u32(c.round);
  w.u64(c.step_offset);
  w.u32(c.update_log_every);
  w.str(c.policy_group);
  w.u8(c.emit_checkpoint ? 1 : 0);
  return std::move(w).take();
}

WorkerNodeConfig decode_worker_config(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  WorkerNodeConfig c;
  c.worker_id = r.u32();
  c.env_id = r.u32();
  c.env_node = r.u32();
  c.policy = r.str();
  const auto mode = r.u8();
  if (mode > 2) throw DecodeError("worker config: bad policy mode");
  c.policy_spec.mode = static_cast<learn::PolicyMode>(mode);
  c.policy_spec.algorithm = r.str();
  c.policy_spec.hyper = read_params(r);
  c.policy_spec.checkpoint = r.str();
  c.env_kind = r.str();
  c.env_params = read_params(r);
  c.assignment.grouped = r.u8() != 0;
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) c.assignment.entities.push_back(r.u32());
  c.frameskip = static_cast<int>(r.u32());
  c.init_seed = r.u64();
  c.worker_seed = r.u64();
  c.restore_path = r.str();
  c.round = r.u32();
  c.step_offset = r.u64();
  c.update_log_every = r.u32();
  c.policy_group = r.str();
  c.emit_checkpoint = r.u8() != 0;
  r.expect_end();
  return c;
}

bool uses_combined_adapter(const routing::PolicySpec& policy, const routing::EntityAssignment& assignment) {
  return assignment.grouped && policy.mode != learn::PolicyMode::Scripted &&
         (policy.algorithm == "sac" || policy.algorithm == "ppo");
}

namespace {

bool any_time_limit(const std::vector<Info>& infos) {
  for (const auto& info : infos) {
    const auto it = info.find(kTimeLimitKey);
    if (it != info.end() && it->second == "true") return true;
  }
  return false;
}

}  // namespace

rt::Task<void> worker_node_main(rt::Comm& comm, WorkerNodeConfig c) {
  const auto all_specs = envs::entity_specs(c.env_kind, c.env_params);
  std::vector<EntitySpec> specs;
  for (std::uint32_t e : c.assignment.entities) specs.push_back(all_specs.at(e));

  GroupView link(comm, c.env_node, specs);
  EntityView* view = &link;
  std::optional<CombinedEntityAdapter> combined;
  if (uses_combined_adapter(c.policy_spec, c.assignment)) view = &combined.emplace(link);
  std::optional<FrameSkip> skip;
  if (c.frameskip > 1) view = &skip.emplace(*view, c.frameskip);

  learn::AgentOptions options;
  options.policy = c.policy;
  options.mode = c.policy_spec.mode;
  options.algorithm = c.policy_spec.algorithm;
  options.hyper = c.policy_spec.hyper;
  options.checkpoint_path = c.policy_spec.checkpoint;
  options.init_seed = c.init_seed;
  options.worker_seed = c.worker_seed;
  std::unique_ptr<learn::Agent> agent = learn::make_agent(options, view->specs());
  if (!c.restore_path.empty() && agent->trainable())
    agent->restore(learn::load_checkpoint(c.restore_path, c.policy_spec.algorithm));

  auto row = [&](const char* kind) {
    MetricsRow m;
    m.wall_time = comm.clock();
    m.round = c.round;
    m.kind = kind;
    m.policy = c.policy;
    m.worker = c.worker_id;
    m.env = c.env_id;
    m.env_steps = c.step_offset + link.exchanges();
    m.grad_steps = agent->version();
    if (agent->trainable() && agent->version() > 0) {
      const auto s = agent->stats();
      m.loss_policy = s.loss_policy;
      m.loss_value = s.loss_value;
      m.entropy = s.entropy;
    }
    return m;
  };

  std::vector<Value> obs = co_await view->reset();
  std::vector<double> returns(specs.size(), 0.0);
  for (;;) {
    std::vector<Value> actions = agent->act(obs);
    ViewStep r = co_await view->step(actions);
    agent->observe(learn::Transition{obs, actions, r.rewards, r.done, r.done && any_time_limit(r.infos), r.obs});
    while (agent->update_pending()) {
      learn::GradVector g = agent->compute_gradient();
      if (!c.policy_group.empty()) g = co_await comm.allreduce_mean(c.policy_group, std::move(g));
      agent->apply_gradient(g);
      if (c.update_log_every > 0 && agent->version() % c.update_log_every == 0) comm.post(make_event(row("update")));
    }
    for (std::size_t k = 0; k < returns.size(); ++k) returns[k] += r.entity_rewards.at(k);
    if (r.done) {
      MetricsRow m = row("episode");
      double sum = 0.0;
      for (double x : returns) sum += x;
      m.episode_return = sum / static_cast<double>(returns.size());
      comm.post(make_event(m));
      std::fill(returns.begin(), returns.end(), 0.0);
      if (view->round_over()) break;
      obs = co_await view->reset();
    } else {
      obs = std::move(r.obs);
    }
  }

  if (!c.policy_group.empty()) comm.leave_group(c.policy_group);
  if (c.emit_checkpoint && agent->trainable()) {
    if (auto ckpt = agent->checkpoint())
      comm.post(make_event(CheckpointEvent{c.policy, c.worker_id, learn::encode_checkpoint(*ckpt)}));
  }
}

}  // namespace arena::orch
