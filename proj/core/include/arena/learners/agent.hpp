#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "arena/common/params.hpp"
#include "arena/interface/space.hpp"
#include "arena/learners/checkpoint.hpp"
#include "arena/learners/ppo.hpp"
#include "arena/learners/sac.hpp"
#include "arena/learners/scripted.hpp"
#include "arena/learners/vectors.hpp"

namespace arena::learn {

/// One lock-step transition as seen by an agent, in the order of the entities it controls.
struct Transition {
  const std::vector<Value>& obs;
  const std::vector<Value>& actions;
  const std::vector<double>& rewards;
  bool done = false;
  /// The episode ended only because of its step limit; values may be bootstrapped.
  bool truncated = false;
  /// Terminal observations when done.
  const std::vector<Value>& next_obs;
};

struct UpdateStats {
  double loss_policy = 0.0;
  double loss_value = 0.0;
  double entropy = 0.0;
};

/// Decision maker behind a worker: maps the observations of its entities to actions and, when
/// trainable, produces gradients that the worker reduces across its policy group.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::vector<Value> act(const std::vector<Value>& obs) = 0;
  virtual void observe(const Transition&) {}

  virtual bool trainable() const { return false; }
  virtual bool update_pending() const { return false; }
  virtual GradVector compute_gradient();
  virtual void apply_gradient(const GradVector&);
  virtual UpdateStats stats() const { return {}; }
  /// Number of applied updates (the parameter version).
  virtual std::uint64_t version() const { return 0; }

  virtual std::optional<Checkpoint> checkpoint() const { return std::nullopt; }
  virtual void restore(const Checkpoint&) {}

  void set_deterministic(bool d) { deterministic_ = d; }
  bool deterministic() const { return deterministic_; }

 protected:
  bool deterministic_ = false;
};

enum class PolicyMode { Trainable, Frozen, Scripted };

struct AgentOptions {
  std::string policy;
  PolicyMode mode = PolicyMode::Trainable;
  /// "sac", "masac" or "ppo"; for scripted policies "static" or "random".
  std::string algorithm;
  Params hyper;
  /// Frozen policies load their parameters from here.
  std::string checkpoint_path;
  /// Identical for every worker of a policy so that members start from the same parameters.
  std::uint64_t init_seed = 0;
  /// Distinct per worker; drives exploration, replay sampling and minibatch order.
  std::uint64_t worker_seed = 0;
};

/// `resolved` receives every hyperparameter with its effective value.
SacConfig sac_config_from(const Params& hyper, Params* resolved = nullptr);
PpoConfig ppo_config_from(const Params& hyper, Params* resolved = nullptr);

/// Builds the agent for `specs` (the entities as the agent sees them, after any adapter).
std::unique_ptr<Agent> make_agent(const AgentOptions& options, const std::vector<EntitySpec>& specs);

class ScriptedAgent : public Agent {
 public:
  ScriptedAgent(ScriptKind kind, std::vector<SpaceSpec> act_spaces, std::uint64_t seed);
  std::vector<Value> act(const std::vector<Value>& obs) override;

 private:
  ScriptKind kind_;
  std::vector<SpaceSpec> spaces_;
  std::mt19937_64 rng_;
};

/// Soft actor-critic over M entities with identical box spaces. M = 1 with an independent
/// critic is plain SAC; common_critic selects the multi-agent update.
class SacAgent : public Agent {
 public:
  SacAgent(const std::vector<EntitySpec>& specs, SacConfig config, bool common_critic, std::string policy,
           std::uint64_t init_seed, std::uint64_t worker_seed, bool frozen = false);

  std::vector<Value> act(const std::vector<Value>& obs) override;
  void observe(const Transition& t) override;
  bool trainable() const override { return !frozen_; }
  bool update_pending() const override { return pending_ > 0; }
  GradVector compute_gradient() override;
  void apply_gradient(const GradVector& g) override;
  UpdateStats stats() const override;
  std::uint64_t version() const override { return learner_.version(); }
  std::optional<Checkpoint> checkpoint() const override;
  void restore(const Checkpoint& c) override;

  SacLearner& learner() { return learner_; }

 private:
  std::string tag() const { return learner_.common_critic() ? "masac" : "sac"; }

  std::string policy_;
  bool frozen_;
  std::vector<std::uint32_t> act_shape_;
  SacLearner learner_;
  std::uint64_t steps_ = 0;
  int pending_ = 0;
};

/// PPO over a single entity with a discrete or box action space.
class PpoAgent : public Agent {
 public:
  PpoAgent(const EntitySpec& spec, PpoConfig config, std::string policy, std::uint64_t init_seed,
           std::uint64_t worker_seed, bool frozen = false);

  std::vector<Value> act(const std::vector<Value>& obs) override;
  void observe(const Transition& t) override;
  bool trainable() const override { return !frozen_; }
  bool update_pending() const override { return learner_.update_in_progress(); }
  GradVector compute_gradient() override { return learner_.compute_gradient(); }
  void apply_gradient(const GradVector& g) override { learner_.apply_gradient(g); }
  UpdateStats stats() const override;
  std::uint64_t version() const override { return learner_.version(); }
  std::optional<Checkpoint> checkpoint() const override;
  void restore(const Checkpoint& c) override;

  PpoLearner& learner() { return learner_; }

 private:
  std::string policy_;
  bool frozen_;
  PpoLearner learner_;
  PpoActResult last_;
};

}  // namespace arena::learn
