#include "arena/routing/plan.hpp"

#include <set>
#include <sstream>

#include "arena/envs/registry.hpp"
#include "arena/learners/sac.hpp"

namespace arena::routing {

namespace {

std::string join_ids(const std::vector<std::uint32_t>& ids, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(ids[i]);
  }
  return out;
}

void validate_entry(const MatchSpec& spec, std::size_t index, const MatchEntry& entry) {
  const auto specs = envs::entity_specs(entry.env_kind, entry.env_config);
  const auto n = static_cast<std::uint32_t>(specs.size());
  std::vector<bool> covered(n, false);
  for (const auto& slot : entry.slots) {
    auto pol = spec.policies.find(slot.policy);
    if (pol == spec.policies.end()) throw UnknownPolicy(slot.policy);
    const auto& ids = slot.assignment.entities;
    if (ids.empty()) throw RoutingError("match " + std::to_string(index) + ": empty entity assignment");
    if (!slot.assignment.grouped && ids.size() != 1)
      throw RoutingError("match " + std::to_string(index) + ": a single assignment names exactly one entity");
    if (slot.frameskip < 1) throw RoutingError("match " + std::to_string(index) + ": frameskip must be >= 1");
    if (pol->second.algorithm == "masac" && !slot.assignment.grouped)
      throw learn::NotGrouped("policy '" + slot.policy + "' uses masac and needs a grouped assignment");
    for (std::uint32_t e : ids) {
      if (e >= n)
        throw RoutingError("match " + std::to_string(index) + ": entity " + std::to_string(e) + " does not exist in " +
                           entry.env_kind + " (" + std::to_string(n) + " entities)");
      if (covered[e]) throw DuplicateEntity(index, e);
      covered[e] = true;
    }
  }
  std::vector<std::uint32_t> missing;
  for (std::uint32_t e = 0; e < n; ++e)
    if (!covered[e]) missing.push_back(e);
  if (!missing.empty()) throw IncompleteCoverage(index, missing);
}

}  // namespace

IncompleteCoverage::IncompleteCoverage(std::size_t env_index, std::vector<std::uint32_t> missing)
    : RoutingError("match " + std::to_string(env_index) + ": entities without a policy: " + join_ids(missing)),
      env_index_(env_index),
      missing_(std::move(missing)) {}

ProcessPlan resolve_plan(const MatchSpec& spec) {
  if (spec.policies.empty()) throw RoutingError("no policies declared");
  if (spec.matches.empty()) throw RoutingError("no matches declared");
  if (spec.replication < 1) throw RoutingError("replication must be >= 1");
  for (std::size_t i = 0; i < spec.matches.size(); ++i) validate_entry(spec, i, spec.matches[i]);

  ProcessPlan plan;
  plan.policies = spec.policies;
  for (const auto& [name, p] : spec.policies) plan.policy_groups[name];
  for (int r = 0; r < spec.replication; ++r) {
    for (std::size_t i = 0; i < spec.matches.size(); ++i) {
      const auto& entry = spec.matches[i];
      const auto env_id = static_cast<std::uint32_t>(plan.envs.size());
      plan.envs.push_back({env_id, entry.env_kind, entry.env_config});
      auto& members = plan.env_groups[env_id];
      for (const auto& slot : entry.slots) {
        const auto wid = static_cast<std::uint32_t>(plan.workers.size());
        plan.workers.push_back({wid, slot.policy, env_id, slot.assignment, slot.frameskip});
        members.push_back(wid);
        plan.policy_groups[slot.policy].push_back(wid);
      }
    }
  }
  return plan;
}

ProcessPlan replicate(const MatchSpec& spec, int n) {
  if (n < 1) throw RoutingError("replication must be >= 1");
  MatchSpec s = spec;
  s.replication = spec.replication * n;
  return resolve_plan(s);
}

ProcessPlan replicate(const ProcessPlan& plan, int n) {
  if (n < 1) throw RoutingError("replication must be >= 1");
  ProcessPlan out;
  out.policies = plan.policies;
  for (const auto& [name, members] : plan.policy_groups) out.policy_groups[name];
  for (int r = 0; r < n; ++r) {
    const auto env_base = static_cast<std::uint32_t>(out.envs.size());
    const auto worker_base = static_cast<std::uint32_t>(out.workers.size());
    for (auto e : plan.envs) {
      e.env_id += env_base;
      out.envs.push_back(e);
    }
    for (auto w : plan.workers) {
      w.worker_id += worker_base;
      w.env_id += env_base;
      out.env_groups[w.env_id].push_back(w.worker_id);
      out.policy_groups[w.policy].push_back(w.worker_id);
      out.workers.push_back(w);
    }
    for (const auto& [env_id, members] : plan.env_groups)
      if (members.empty()) out.env_groups[env_id + env_base];
  }
  return out;
}

std::vector<MatchEntry> round_robin_pairings(const std::vector<std::string>& policies, const std::string& env_kind,
                                             const EnvParams& env_config, const std::vector<std::uint32_t>& team_a,
                                             const std::vector<std::uint32_t>& team_b) {
  if (policies.size() < 2) throw TooFewPolicies();
  std::vector<MatchEntry> out;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    for (std::size_t j = i + 1; j < policies.size(); ++j) {
      MatchEntry e{env_kind, env_config, {}};
      for (std::uint32_t id : team_a) e.slots.push_back({policies[i], EntityAssignment::single(id), 1});
      for (std::uint32_t id : team_b) e.slots.push_back({policies[j], EntityAssignment::single(id), 1});
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<MatchEntry> round_robin_pairings(const std::vector<std::string>& policies, int team_slots,
                                             const std::string& env_kind, const EnvParams& env_config) {
  if (team_slots < 1) throw RoutingError("team_slots must be >= 1");
  std::vector<std::uint32_t> a, b;
  for (int k = 0; k < team_slots; ++k) {
    a.push_back(static_cast<std::uint32_t>(k));
    b.push_back(static_cast<std::uint32_t>(team_slots + k));
  }
  return round_robin_pairings(policies, env_kind, env_config, a, b);
}

std::string plan_summary(const ProcessPlan& plan) {
  std::ostringstream out;
  out << "nodes: " << plan.node_count() << " (" << plan.envs.size() << " env, " << plan.workers.size()
      << " worker)\n";
  out << "policies:\n";
  for (const auto& [name, p] : plan.policies) {
    const char* mode = p.mode == learn::PolicyMode::Trainable ? "trainable"
                       : p.mode == learn::PolicyMode::Frozen  ? "frozen"
                                                              : "scripted";
    out << "  " << name << ": " << mode << " " << p.algorithm << "\n";
  }
  out << "policy groups:\n";
  for (const auto& [name, members] : plan.policy_groups) {
    std::set<std::size_t> group_sizes;
    bool any_single = false;
    for (std::uint32_t w : members) {
      const auto& a = plan.workers[w].assignment;
      if (a.grouped) group_sizes.insert(a.entities.size());
      else any_single = true;
    }
    std::string shape;
    if (members.empty()) shape = "unused";
    else if (!any_single && group_sizes.size() == 1)
      shape = "grouped, " + std::to_string(*group_sizes.begin()) + " entities each";
    else if (any_single && group_sizes.empty()) shape = "single";
    else shape = "mixed";
    out << "  policy " << name << ": " << members.size() << " workers (" << shape << ")\n";
  }
  out << "env groups:\n";
  for (const auto& env : plan.envs) {
    out << "  env " << env.env_id << " " << env.kind << ":";
    for (std::uint32_t w : plan.env_groups.at(env.env_id)) {
      const auto& wk = plan.workers[w];
      out << " w" << w << "=" << wk.policy << (wk.assignment.grouped ? "[" : "(") << join_ids(wk.assignment.entities)
          << (wk.assignment.grouped ? "]" : ")");
      if (wk.frameskip > 1) out << "/" << wk.frameskip;
    }
    out << "\n";
  }
  out << "total: " << plan.node_count() << " nodes\n";
  return out.str();
}

}  // namespace arena::routing
