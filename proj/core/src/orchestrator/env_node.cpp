#include "arena/orchestrator/env_node.hpp"

#include "arena/common/seed.hpp"
#include "arena/envs/registry.hpp"
#include "arena/orchestrator/events.hpp"

namespace arena::orch {

StepBatch slice_batch(const StepBatch& batch, const std::vector<std::uint32_t>& entities) {
  StepBatch out;
  out.done = batch.done;
  for (std::uint32_t e : entities) {
    out.observations.push_back(batch.observations.at(e));
    out.rewards.push_back(batch.rewards.at(e));
    out.infos.push_back(batch.infos.at(e));
  }
  return out;
}

ServeResult env_serve_step(MultiEntityEnv& env, const std::vector<WorkerSlot>& slots,
                           const std::vector<std::optional<Bytes>>& messages) {
  const auto& specs = env.entities();
  if (messages.size() != slots.size()) throw Error("env_serve_step: one message slot per worker expected");
  std::vector<std::optional<Value>> assembled(specs.size());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& slot = slots[k];
    if (!messages[k]) throw MissingWorkerMessage(slot.worker_id);
    ActionMessage msg;
    try {
      msg = decode_actions(*messages[k]);
    } catch (const DecodeError& e) {
      throw MalformedAction(slot.entities.empty() ? 0 : slot.entities.front(), e.what());
    }
    if (msg.actions.size() != slot.entities.size())
      throw MalformedAction(slot.entities.empty() ? 0 : slot.entities.front(),
                            "worker " + std::to_string(slot.worker_id) + " sent " + std::to_string(msg.actions.size()) +
                                " actions for " + std::to_string(slot.entities.size()) + " entities");
    for (std::size_t i = 0; i < slot.entities.size(); ++i) {
      const std::uint32_t e = slot.entities[i];
      const auto& space = specs.at(e).act_space;
      auto& a = msg.actions[i];
      if (!a) {
        assembled[e] = null_action(space);
      } else {
        if (!space_contains(space, *a)) throw MalformedAction(e, "value outside " + space.describe());
        assembled[e] = std::move(*a);
      }
    }
  }
  std::vector<Value> actions;
  actions.reserve(assembled.size());
  for (std::size_t e = 0; e < assembled.size(); ++e) {
    if (!assembled[e]) throw MalformedAction(static_cast<std::uint32_t>(e), "no worker controls this entity");
    actions.push_back(std::move(*assembled[e]));
  }
  ServeResult out;
  out.batch = env.step(actions);
  if (auto err = validate_batch(specs, out.batch)) throw Error("environment produced an invalid batch: " + describe(*err));
  for (const auto& slot : slots) out.slices.push_back(slice_batch(out.batch, slot.entities));
  return out;
}

std::uint64_t episode_seed(std::uint64_t env_seed, std::uint64_t episode) { return derive_seed(env_seed, episode); }

Bytes encode_env_config(const EnvNodeConfig& c) {
  ByteWriter w;
  w.u32(c.env_id);
  w.str(c.kind);
  write_params(w, c.params);
  w.u64(c.env_seed);
  w.u64(c.step_share);
  w.u32(c.round);
  w.u64(c.step_offset);
  w.u32(static_cast<std::uint32_t>(c.slots.size()));
  for (std::size_t k = 0; k < c.slots.size(); ++k) {
    w.u32(c.slots[k].worker_id);
    w.u32(c.worker_nodes.at(k));
    w.u32(static_cast<std::uint32_t>(c.slots[k].entities.size()));
    for (std::uint32_t e : c.slots[k].entities) w.u32(e);
  }
  return std::move(w).take();
}

EnvNodeConfig decode_env_config(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  EnvNodeConfig c;
  c.env_id = r.u32();
  c.kind = r.str();
  c.params = read_params(r);
  c.env_seed = r.u64();
  c.step_share = r.u64();
  c.round = r.u32();
  c.step_offset = r.u64();
  const auto n = r.u32();
  for (std::uint32_t k = 0; k < n; ++k) {
    WorkerSlot s;
    s.worker_id = r.u32();
    c.worker_nodes.push_back(r.u32());
    const auto m = r.u32();
    for (std::uint32_t i = 0; i < m; ++i) s.entities.push_back(r.u32());
    c.slots.push_back(std::move(s));
  }
  r.expect_end();
  return c;
}

rt::Task<void> env_node_main(rt::Comm& comm, EnvNodeConfig c) {
  auto env = envs::make_env(c.kind, c.params);
  const std::size_t n = env->entity_count();
  auto reset_batch = [&](std::uint64_t episode) {
    StepBatch b;
    b.observations = env->reset(episode_seed(c.env_seed, episode));
    b.rewards.assign(n, 0.0);
    b.infos.assign(n, Info{});
    return b;
  };

  std::uint64_t episode = 0;
  const StepBatch first = reset_batch(episode);
  for (std::size_t k = 0; k < c.slots.size(); ++k) {
    EnvReply rep;
    rep.is_reset = true;
    rep.batch = slice_batch(first, c.slots[k].entities);
    comm.send(c.worker_nodes[k], encode_reply(rep));
  }

  std::uint64_t steps = 0;
  for (;;) {
    std::vector<std::optional<Bytes>> messages;
    for (std::size_t k = 0; k < c.slots.size(); ++k) {
      try {
        messages.emplace_back(co_await comm.recv(c.worker_nodes[k]));
      } catch (const rt::Timeout&) {
        throw MissingWorkerMessage(c.slots[k].worker_id);
      }
    }
    ServeResult served = env_serve_step(*env, c.slots, messages);
    ++steps;
    bool round_over = false;
    std::optional<StepBatch> next;
    if (served.batch.done) {
      ++episode;
      round_over = steps >= c.step_share;
      if (!round_over) next = reset_batch(episode);
    }
    for (std::size_t k = 0; k < c.slots.size(); ++k) {
      EnvReply rep;
      rep.round_over = round_over;
      rep.batch = std::move(served.slices[k]);
      if (next) rep.next_reset = slice_batch(*next, c.slots[k].entities);
      comm.send(c.worker_nodes[k], encode_reply(rep));
    }
    if (round_over) break;
  }

  MetricsRow row;
  row.wall_time = comm.clock();
  row.round = c.round;
  row.kind = "env";
  row.env = c.env_id;
  row.env_steps = c.step_offset + steps;
  row.env_config = c.kind + ":" + format_params(c.params);
  comm.post(make_event(row));
}

}  // namespace arena::orch
