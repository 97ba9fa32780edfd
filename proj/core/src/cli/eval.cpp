#include "arena/cli/eval.hpp"

#include <fstream>
#include <memory>
#include <optional>

#include "arena/common/format.hpp"
#include "arena/common/seed.hpp"
#include "arena/envs/coopnav.hpp"
#include "arena/envs/registry.hpp"
#include "arena/learners/agent.hpp"
#include "arena/orchestrator/env_node.hpp"
#include "arena/orchestrator/views.hpp"
#include "arena/orchestrator/worker_node.hpp"

namespace arena::cli {

namespace {

/// Carries entity specs only; the combined adapter needs nothing else to reshape values.
class SpecView : public orch::EntityView {
 public:
  explicit SpecView(std::vector<EntitySpec> specs) : specs_(std::move(specs)) {}
  const std::vector<EntitySpec>& specs() const override { return specs_; }
  rt::Task<std::vector<Value>> reset() override { throw Error("spec view cannot reset"); }
  rt::Task<orch::ViewStep> step(std::vector<Value>) override { throw Error("spec view cannot step"); }
  bool round_over() const override { return false; }
  const std::vector<Info>& infos() const override { return infos_; }

 private:
  std::vector<EntitySpec> specs_;
  std::vector<Info> infos_;
};

struct SlotAgent {
  routing::Slot slot;
  std::unique_ptr<SpecView> view;
  std::unique_ptr<orch::CombinedEntityAdapter> combined;
  std::unique_ptr<learn::Agent> agent;
  std::vector<Value> held;
  int since_decision = 0;
  std::vector<double> returns;
};

bool exited(const Info& info) {
  auto it = info.find("exited");
  return it != info.end() && it->second == "true";
}

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << header << '\n';
  return out;
}

}  // namespace

EvalResult evaluate(const RunConfig& config, const EvalOptions& options) {
  if (options.episodes < 1) throw Error("eval needs at least one episode");
  const routing::MatchSpec spec = match_spec(config);
  if (options.match >= spec.matches.size())
    throw Error("eval: match " + std::to_string(options.match) + " does not exist");
  const routing::MatchEntry& entry = spec.matches[options.match];

  auto env = envs::make_env(entry.env_kind, entry.env_config);
  const auto& all_specs = env->entities();

  std::vector<SlotAgent> slots;
  for (std::size_t i = 0; i < entry.slots.size(); ++i) {
    SlotAgent s;
    s.slot = entry.slots[i];
    const routing::PolicySpec& policy = spec.policies.at(s.slot.policy);
    std::vector<EntitySpec> specs;
    for (std::uint32_t e : s.slot.assignment.entities) specs.push_back(all_specs.at(e));
    s.view = std::make_unique<SpecView>(specs);
    std::vector<EntitySpec> agent_specs = specs;
    if (orch::uses_combined_adapter(policy, s.slot.assignment)) {
      s.combined = std::make_unique<orch::CombinedEntityAdapter>(*s.view);
      agent_specs = s.combined->specs();
    }
    learn::AgentOptions o;
    o.policy = s.slot.policy;
    o.algorithm = policy.algorithm;
    o.hyper = policy.hyper;
    o.mode = policy.mode == learn::PolicyMode::Scripted ? learn::PolicyMode::Scripted : learn::PolicyMode::Frozen;
    o.checkpoint_path = policy.mode == learn::PolicyMode::Frozen
                            ? policy.checkpoint
                            : (options.checkpoint_dir / (s.slot.policy + ".ckpt")).string();
    o.init_seed = derive_seed(options.seed, hash_name(s.slot.policy));
    o.worker_seed = derive_seed(options.seed, 0x5eed0000ULL + i);
    s.agent = learn::make_agent(o, agent_specs);
    s.agent->set_deterministic(true);
    slots.push_back(std::move(s));
  }

  std::optional<std::ofstream> trace;
  std::optional<std::ofstream> targets;
  if (!options.trace_path.empty()) trace = open_csv(options.trace_path, "episode,t,entity,pos_x,pos_y,reward");
  auto* coopnav = dynamic_cast<envs::CoopNav*>(env.get());
  if (!options.targets_path.empty() && coopnav) targets = open_csv(options.targets_path, "episode,target,pos_x,pos_y");

  EvalResult result;
  const std::uint64_t env_seed = derive_seed(options.seed, hash_name("eval"));
  for (int ep = 0; ep < options.episodes; ++ep) {
    std::vector<Value> obs = env->reset(orch::episode_seed(env_seed, static_cast<std::uint64_t>(ep)));
    std::vector<Info> infos(all_specs.size());
    if (targets) {
      const auto& tp = coopnav->state().target_pos;
      for (std::size_t k = 0; k < tp.size(); ++k)
        *targets << ep << ',' << k << ',' << format_double(tp[k][0]) << ',' << format_double(tp[k][1]) << '\n';
    }
    for (auto& s : slots) {
      s.returns.assign(s.slot.assignment.entities.size(), 0.0);
      s.since_decision = 0;
    }
    for (int t = 1;; ++t) {
      std::vector<Value> actions(all_specs.size());
      for (auto& s : slots) {
        if (s.since_decision % s.slot.frameskip == 0) {
          std::vector<Value> own;
          for (std::uint32_t e : s.slot.assignment.entities) own.push_back(obs[e]);
          if (s.combined) own = s.combined->combine(own);
          std::vector<Value> chosen = s.agent->act(own);
          s.held = s.combined ? s.combined->split(chosen.front()) : std::move(chosen);
        }
        ++s.since_decision;
        for (std::size_t k = 0; k < s.slot.assignment.entities.size(); ++k) {
          const std::uint32_t e = s.slot.assignment.entities[k];
          actions[e] = exited(infos[e]) ? null_action(all_specs[e].act_space) : s.held[k];
        }
      }
      StepBatch b = env->step(actions);
      ++result.steps;
      for (auto& s : slots) {
        for (std::size_t k = 0; k < s.slot.assignment.entities.size(); ++k)
          s.returns[k] += b.rewards.at(s.slot.assignment.entities[k]);
      }
      if (trace) {
        for (std::size_t e = 0; e < all_specs.size(); ++e) {
          *trace << ep << ',' << t << ',' << e << ',';
          if (coopnav) {
            const auto& p = coopnav->state().agent_pos.at(e);
            *trace << format_double(p[0]) << ',' << format_double(p[1]);
          } else {
            *trace << ',';
          }
          *trace << ',' << format_double(b.rewards[e]) << '\n';
          ++result.trace_rows;
        }
      }
      infos = b.infos;
      obs = std::move(b.observations);
      if (b.done) break;
    }
    for (const auto& s : slots) {
      double sum = 0.0;
      for (double r : s.returns) sum += r;
      result.returns[s.slot.policy].push_back(sum / static_cast<double>(s.returns.size()));
    }
  }
  return result;
}

}  // namespace arena::cli
