#include "arena/orchestrator/round.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

#include "arena/common/seed.hpp"
#include "arena/orchestrator/env_node.hpp"
#include "arena/orchestrator/worker_node.hpp"

namespace arena::orch {

namespace {

std::string env_group(std::uint32_t env_id) { return "env:" + std::to_string(env_id); }
std::string policy_group(const std::string& policy) { return "policy:" + policy; }

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

rt::Task<void> node_main(rt::Comm& comm, const rt::NodeDescriptor& desc) {
  if (desc.role == rt::NodeRole::Env) return env_node_main(comm, decode_env_config(desc.config));
  return worker_node_main(comm, decode_worker_config(desc.config));
}

Orchestrator::Orchestrator(routing::ProcessPlan plan, RunOptions options)
    : plan_(std::move(plan)),
      options_(std::move(options)),
      runtime_(rt::make_runtime(options_.transport, options_.timeout_seconds)),
      env_offsets_(plan_.envs.size(), 0) {}

Orchestrator::~Orchestrator() = default;

std::filesystem::path Orchestrator::checkpoint_path(const std::string& policy) const {
  return options_.checkpoint_dir / (policy + ".ckpt");
}

std::vector<rt::NodeDescriptor> Orchestrator::descriptors(const RoundConfig& cfg) const {
  if (cfg.step_budget < 1) throw Error("step_budget must be >= 1");
  const std::uint64_t n_envs = plan_.envs.size();
  const std::uint64_t share = (cfg.step_budget + n_envs - 1) / n_envs;
  const std::uint64_t round_seed = derive_seed(options_.seed, cfg.round_index);

  std::vector<rt::NodeDescriptor> nodes;
  std::vector<EnvParams> env_params;
  for (const auto& env : plan_.envs) {
    EnvParams params = env.config;
    for (const auto& [k, v] : cfg.env_overrides) params[k] = v;
    env_params.push_back(params);

    EnvNodeConfig ec;
    ec.env_id = env.env_id;
    ec.kind = env.kind;
    ec.params = params;
    ec.env_seed = derive_seed(round_seed, env.env_id);
    ec.step_share = share;
    ec.round = cfg.round_index;
    ec.step_offset = env_offsets_.at(env.env_id);
    for (std::uint32_t w : plan_.env_groups.at(env.env_id)) {
      ec.slots.push_back(WorkerSlot{w, plan_.workers[w].assignment.entities});
      ec.worker_nodes.push_back(plan_.worker_node(w));
    }
    nodes.push_back(rt::NodeDescriptor{plan_.env_node(env.env_id), rt::NodeRole::Env,
                                       {{env_group(env.env_id), rt::GroupKind::Env}}, encode_env_config(ec)});
  }

  for (const auto& w : plan_.workers) {
    const auto& spec = plan_.policies.at(w.policy);
    const bool trainable = spec.mode == learn::PolicyMode::Trainable;
    WorkerNodeConfig wc;
    wc.worker_id = w.worker_id;
    wc.env_id = w.env_id;
    wc.env_node = plan_.env_node(w.env_id);
    wc.policy = w.policy;
    wc.policy_spec = spec;
    wc.env_kind = plan_.envs[w.env_id].kind;
    wc.env_params = env_params[w.env_id];
    wc.assignment = w.assignment;
    wc.frameskip = w.frameskip;
    wc.init_seed = derive_seed(options_.seed, hash_name(w.policy));
    wc.worker_seed = derive_seed(round_seed, 0x5eed0000ULL + w.worker_id);
    if (trainable && !options_.checkpoint_dir.empty() && std::filesystem::exists(checkpoint_path(w.policy)))
      wc.restore_path = checkpoint_path(w.policy).string();
    wc.round = cfg.round_index;
    wc.step_offset = env_offsets_.at(w.env_id);
    wc.update_log_every = options_.update_log_every;
    if (trainable) wc.policy_group = policy_group(w.policy);
    wc.emit_checkpoint = trainable;

    rt::NodeDescriptor d{plan_.worker_node(w.worker_id), rt::NodeRole::Worker,
                         {{env_group(w.env_id), rt::GroupKind::Env}}, encode_worker_config(wc)};
    if (trainable) d.groups.push_back({wc.policy_group, rt::GroupKind::Policy});
    nodes.push_back(std::move(d));
  }
  return nodes;
}

RoundReport Orchestrator::run_round(const RoundConfig& cfg) {
  const auto nodes = descriptors(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  struct Episode {
    std::uint64_t env_steps;
    std::uint32_t worker;
    double score;
  };
  std::map<std::string, std::vector<Episode>> episodes;
  std::map<std::string, CheckpointEvent> ckpts;
  RoundReport report;
  report.round = cfg.round_index;
  report.env_steps.assign(plan_.envs.size(), 0);

  auto sink = [&](rt::NodeId, const rt::NodeEvent& e) {
    if (e.kind == kMetricsEvent) {
      MetricsRow row = decode_metrics(e);
      if (row.kind == "episode" && row.episode_return && row.worker)
        episodes[row.policy].push_back({row.env_steps, *row.worker, *row.episode_return});
      if (row.kind == "env" && row.env) report.env_steps.at(*row.env) = row.env_steps - env_offsets_.at(*row.env);
      if (options_.on_row) options_.on_row(row);
    } else if (e.kind == kCheckpointEvent) {
      CheckpointEvent c = decode_checkpoint_event(e);
      auto it = ckpts.find(c.policy);
      if (it == ckpts.end()) {
        ckpts.emplace(c.policy, std::move(c));
        return;
      }
      auto decoded_a = learn::decode_checkpoint(it->second.checkpoint);
      auto decoded_b = learn::decode_checkpoint(c.checkpoint);
      if (decoded_a.payload != decoded_b.payload || decoded_a.step_count != decoded_b.step_count)
        report.members_consistent = false;
      if (c.worker < it->second.worker) it->second = std::move(c);
    }
  };

  runtime_->run(nodes, node_main, sink);

  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (std::size_t e = 0; e < plan_.envs.size(); ++e) {
    report.steps += report.env_steps[e];
    env_offsets_[e] += report.env_steps[e];
  }
  for (const auto& [name, members] : plan_.policy_groups) {
    if (members.empty()) continue;
    auto& eps = episodes[name];
    std::sort(eps.begin(), eps.end(), [](const Episode& a, const Episode& b) {
      return a.env_steps != b.env_steps ? a.env_steps < b.env_steps : a.worker < b.worker;
    });
    PolicyRound pr;
    for (const auto& ep : eps) pr.episode_returns.push_back(ep.score);
    pr.episodes = pr.episode_returns.size();
    if (pr.episodes > 0)
      pr.mean_score = std::accumulate(pr.episode_returns.begin(), pr.episode_returns.end(), 0.0) /
                      static_cast<double>(pr.episodes);
    report.policies[name] = std::move(pr);
  }
  if (!options_.checkpoint_dir.empty()) {
    for (const auto& [policy, c] : ckpts) {
      write_file(checkpoint_path(policy), c.checkpoint);
      report.checkpoints[policy] = checkpoint_path(policy);
    }
  }
  return report;
}

std::vector<RoundReport> Orchestrator::run_rounds(std::vector<RoundConfig> schedule, const RoundHooks& hooks) {
  if (schedule.empty()) throw Error("run_rounds needs a nonempty schedule");
  std::vector<RoundReport> reports;
  for (auto& cfg : schedule) {
    if (hooks.before) hooks.before(cfg);
    reports.push_back(run_round(cfg));
    if (hooks.after) hooks.after(reports.back());
  }
  return reports;
}

RoundReport run_round(const routing::ProcessPlan& plan, const RoundConfig& config, const RunOptions& options) {
  Orchestrator o(plan, options);
  return o.run_round(config);
}

}  // namespace arena::orch
