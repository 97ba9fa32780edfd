#pragma once

#include <optional>
#include <vector>

#include "arena/interface/step_batch.hpp"
#include "arena/orchestrator/messages.hpp"
#include "arena/runtime/comm.hpp"

namespace arena::orch {

/// Result of one decision as seen through a view.
struct ViewStep {
  std::vector<Value> obs;  // terminal observations when done
  std::vector<double> rewards;
  bool done = false;
  std::vector<Info> infos;
  /// Per underlying entity reward, unaffected by adapters that reshape the entity list.
  std::vector<double> entity_rewards;
};

/// A worker's list-valued window onto its environment.
class EntityView {
 public:
  virtual ~EntityView() = default;
  virtual const std::vector<EntitySpec>& specs() const = 0;
  /// Observations of a new episode. After a done step this is the episode the environment
  /// already reset to; no exchange takes place.
  virtual rt::Task<std::vector<Value>> reset() = 0;
  virtual rt::Task<ViewStep> step(std::vector<Value> actions) = 0;
  /// True once the environment has announced that the round ends with the current episode.
  virtual bool round_over() const = 0;
  /// Infos that accompanied the most recent observations.
  virtual const std::vector<Info>& infos() const = 0;
};

/// Direct link to the env node for a Single or Group assignment. Entities marked as exited
/// send the null action regardless of what the learner chose.
class GroupView : public EntityView {
 public:
  GroupView(rt::Comm& comm, rt::NodeId env_node, std::vector<EntitySpec> specs);

  const std::vector<EntitySpec>& specs() const override { return specs_; }
  rt::Task<std::vector<Value>> reset() override;
  rt::Task<ViewStep> step(std::vector<Value> actions) override;
  bool round_over() const override { return round_over_; }
  const std::vector<Info>& infos() const override { return infos_; }
  /// Lock-step exchanges this view has taken part in.
  std::uint64_t exchanges() const { return exchanges_; }

 private:
  enum class State { Fresh, Running, AfterDone };

  rt::Comm& comm_;
  rt::NodeId env_;
  std::vector<EntitySpec> specs_;
  State state_ = State::Fresh;
  bool round_over_ = false;
  std::vector<Info> infos_;
  std::optional<StepBatch> next_reset_;
  std::uint64_t exchanges_ = 0;
};

struct ProxyStep {
  Value obs;
  double reward = 0.0;
  bool done = false;
  Info info;
};

/// Single-entity view with the usual reset/step signature of a single-agent environment.
class ProxyEnv {
 public:
  explicit ProxyEnv(EntityView& inner);

  const EntitySpec& spec() const { return inner_.specs().front(); }
  rt::Task<Value> reset();
  rt::Task<ProxyStep> step(Value action);
  bool round_over() const { return inner_.round_over(); }

 private:
  EntityView& inner_;
};

/// Presents a group of box-space entities as one entity: concatenated observation and action,
/// reward equal to the sum of the entity rewards.
class CombinedEntityAdapter : public EntityView {
 public:
  explicit CombinedEntityAdapter(EntityView& inner);

  const std::vector<EntitySpec>& specs() const override { return specs_; }
  rt::Task<std::vector<Value>> reset() override;
  rt::Task<ViewStep> step(std::vector<Value> actions) override;
  bool round_over() const override { return inner_.round_over(); }
  const std::vector<Info>& infos() const override { return infos_; }

  std::vector<Value> combine(const std::vector<Value>& per_entity) const;
  std::vector<Value> split(const Value& joint_action) const;
  Info merge(const std::vector<Info>& infos) const;

 private:
  EntityView& inner_;
  std::vector<EntitySpec> specs_;
  std::vector<Info> infos_;
};

/// Asks for a decision every k-th exchange and repeats it in between; rewards between decisions
/// are summed. An episode end always closes the current decision.
class FrameSkip : public EntityView {
 public:
  FrameSkip(EntityView& inner, int k);

  const std::vector<EntitySpec>& specs() const override { return inner_.specs(); }
  rt::Task<std::vector<Value>> reset() override { return inner_.reset(); }
  rt::Task<ViewStep> step(std::vector<Value> actions) override;
  bool round_over() const override { return inner_.round_over(); }
  const std::vector<Info>& infos() const override { return inner_.infos(); }
  int interval() const { return k_; }
  /// Exchanges executed by the most recent decision.
  int last_exchanges() const { return last_exchanges_; }

 private:
  EntityView& inner_;
  int k_;
  int last_exchanges_ = 0;
};

}  // namespace arena::orch
