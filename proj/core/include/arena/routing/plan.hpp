#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arena/common/error.hpp"
#include "arena/envs/params.hpp"
#include "arena/learners/agent.hpp"

namespace arena::routing {

/// Which entities of one environment a worker controls: Single(e) or Group([e...]).
struct EntityAssignment {
  bool grouped = false;
  std::vector<std::uint32_t> entities;

  static EntityAssignment single(std::uint32_t e) { return {false, {e}}; }
  static EntityAssignment group(std::vector<std::uint32_t> ids) { return {true, std::move(ids)}; }
  bool operator==(const EntityAssignment&) const = default;
};

struct PolicySpec {
  learn::PolicyMode mode = learn::PolicyMode::Trainable;
  /// sac | masac | ppo for trainable and frozen policies; static | random for scripted ones.
  std::string algorithm;
  Params hyper;
  /// Checkpoint a frozen policy is loaded from.
  std::string checkpoint;
  bool operator==(const PolicySpec&) const = default;
};

struct Slot {
  std::string policy;
  EntityAssignment assignment;
  /// The worker decides every `frameskip`-th exchange and repeats its action in between.
  int frameskip = 1;
  bool operator==(const Slot&) const = default;
};

struct MatchEntry {
  std::string env_kind;
  EnvParams env_config;
  std::vector<Slot> slots;
  bool operator==(const MatchEntry&) const = default;
};

struct MatchSpec {
  std::map<std::string, PolicySpec> policies;
  std::vector<MatchEntry> matches;
  int replication = 1;
};

struct EnvNode {
  std::uint32_t env_id = 0;
  std::string kind;
  EnvParams config;
  bool operator==(const EnvNode&) const = default;
};

struct WorkerNode {
  std::uint32_t worker_id = 0;
  std::string policy;
  std::uint32_t env_id = 0;
  EntityAssignment assignment;
  int frameskip = 1;
  bool operator==(const WorkerNode&) const = default;
};

struct ProcessPlan {
  std::vector<EnvNode> envs;
  std::vector<WorkerNode> workers;
  std::map<std::uint32_t, std::vector<std::uint32_t>> env_groups;   // env id -> worker ids
  std::map<std::string, std::vector<std::uint32_t>> policy_groups;  // policy -> worker ids
  std::map<std::string, PolicySpec> policies;

  std::size_t node_count() const { return envs.size() + workers.size(); }
  /// Transport node ids: env nodes first, then workers.
  std::uint32_t env_node(std::uint32_t env_id) const { return env_id; }
  std::uint32_t worker_node(std::uint32_t worker_id) const {
    return static_cast<std::uint32_t>(envs.size()) + worker_id;
  }
  bool operator==(const ProcessPlan&) const = default;
};

class RoutingError : public Error {
 public:
  using Error::Error;
};

class UnknownPolicy : public RoutingError {
 public:
  explicit UnknownPolicy(std::string name)
      : RoutingError("unknown policy '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class IncompleteCoverage : public RoutingError {
 public:
  IncompleteCoverage(std::size_t env_index, std::vector<std::uint32_t> missing);
  std::size_t env_index() const { return env_index_; }
  const std::vector<std::uint32_t>& missing() const { return missing_; }

 private:
  std::size_t env_index_;
  std::vector<std::uint32_t> missing_;
};

class DuplicateEntity : public RoutingError {
 public:
  DuplicateEntity(std::size_t env_index, std::uint32_t entity)
      : RoutingError("match " + std::to_string(env_index) + ": entity " + std::to_string(entity) +
                     " is assigned more than once"),
        env_index_(env_index),
        entity_(entity) {}
  std::size_t env_index() const { return env_index_; }
  std::uint32_t entity() const { return entity_; }

 private:
  std::size_t env_index_;
  std::uint32_t entity_;
};

class TooFewPolicies : public RoutingError {
 public:
  TooFewPolicies() : RoutingError("round robin needs at least two policies") {}
};

/// Compiles a spec into env and worker nodes: ids are dense and ordered by replica, then match
/// entry, then slot. Throws on unknown policies, coverage gaps, duplicates and invalid slots.
ProcessPlan resolve_plan(const MatchSpec& spec);

/// The spec resolved with its replication multiplied by `n`.
ProcessPlan replicate(const MatchSpec& spec, int n);
/// `n` copies of a resolved plan, merged into one (policy groups span copies).
ProcessPlan replicate(const ProcessPlan& plan, int n);

/// One entry per unordered pair of policies in lexicographic order of their positions. The first
/// policy controls `team_a`, the second `team_b`, one Single slot per entity.
std::vector<MatchEntry> round_robin_pairings(const std::vector<std::string>& policies, const std::string& env_kind,
                                             const EnvParams& env_config, const std::vector<std::uint32_t>& team_a,
                                             const std::vector<std::uint32_t>& team_b);

/// Pairings for two teams of `team_slots` entities: team A is 0..k-1, team B is k..2k-1.
std::vector<MatchEntry> round_robin_pairings(const std::vector<std::string>& policies, int team_slots,
                                             const std::string& env_kind, const EnvParams& env_config);

/// Stable, human-readable listing of nodes and groups.
std::string plan_summary(const ProcessPlan& plan);

}  // namespace arena::routing
