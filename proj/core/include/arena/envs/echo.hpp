#pragma once

#include "arena/envs/params.hpp"
#include "arena/interface/env.hpp"

namespace arena::envs {

/// Deterministic protocol fixture: entity i observes (t, i) and is rewarded the numeric
/// value of its own action.
struct EchoEnvConfig {
  int n_entities = 1;
  int horizon = 1;
  int action_n = 10;
  /// Optional early exit: entity `exit_entity` leaves after `exit_step` steps (-1 disables).
  int exit_entity = -1;
  int exit_step = -1;

  /// `resolved` receives every parameter with its effective value.
  static EchoEnvConfig from_params(const EnvParams& params, EnvParams* resolved = nullptr);
  void validate() const;
};

class EchoEnv final : public MultiEntityEnv {
 public:
  explicit EchoEnv(EchoEnvConfig config);

  const std::vector<EntitySpec>& entities() const override { return specs_; }
  std::vector<Value> reset(std::uint64_t episode_seed) override;
  StepBatch step(std::span<const Value> actions) override;

  int t() const { return t_; }

 private:
  bool has_exited(int entity) const;
  Value observation(int entity) const;

  EchoEnvConfig config_;
  std::vector<EntitySpec> specs_;
  int t_ = 0;
};

}  // namespace arena::envs
