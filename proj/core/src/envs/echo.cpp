#include "arena/envs/echo.hpp"

#include <algorithm>

namespace arena::envs {

EchoEnvConfig EchoEnvConfig::from_params(const EnvParams& params, EnvParams* resolved) {
  ParamReader r(params);
  EchoEnvConfig c;
  c.n_entities = static_cast<int>(r.get("n_entities", c.n_entities));
  c.horizon = static_cast<int>(r.get("horizon", c.horizon));
  c.action_n = static_cast<int>(r.get("action_n", c.action_n));
  c.exit_entity = static_cast<int>(r.get("exit_entity", c.exit_entity));
  c.exit_step = static_cast<int>(r.get("exit_step", c.exit_step));
  r.reject_unknown("echo");
  if (resolved) *resolved = r.resolved();
  c.validate();
  return c;
}

void EchoEnvConfig::validate() const {
  if (n_entities < 1) throw InvalidEnvConfig("echo: n_entities must be >= 1");
  if (horizon < 1) throw InvalidEnvConfig("echo: horizon must be >= 1");
  if (action_n < 1) throw InvalidEnvConfig("echo: action_n must be >= 1");
  if (exit_entity >= n_entities) throw InvalidEnvConfig("echo: exit_entity out of range");
}

EchoEnv::EchoEnv(EchoEnvConfig config) : config_(config) {
  config_.validate();
  const double high = std::max({static_cast<double>(config_.horizon), static_cast<double>(config_.n_entities), 1.0});
  for (int i = 0; i < config_.n_entities; ++i) {
    specs_.push_back(EntitySpec{static_cast<std::uint32_t>(i), SpaceSpec::box({2}, 0.0, high),
                                SpaceSpec::discrete(config_.action_n)});
  }
}

bool EchoEnv::has_exited(int entity) const {
  return entity == config_.exit_entity && config_.exit_step >= 0 && t_ >= config_.exit_step;
}

Value EchoEnv::observation(int entity) const {
  if (has_exited(entity)) return null_observation(specs_[static_cast<std::size_t>(entity)].obs_space);
  return Tensor::vector({static_cast<double>(t_), static_cast<double>(entity)});
}

std::vector<Value> EchoEnv::reset(std::uint64_t) {
  t_ = 0;
  std::vector<Value> out;
  for (int i = 0; i < config_.n_entities; ++i) out.push_back(observation(i));
  return out;
}

StepBatch EchoEnv::step(std::span<const Value> actions) {
  if (t_ >= config_.horizon) throw StepAfterDone();
  if (actions.size() != static_cast<std::size_t>(config_.n_entities)) throw Error("echo: action count mismatch");
  StepBatch b;
  for (int i = 0; i < config_.n_entities; ++i) {
    const bool gone = has_exited(i);
    b.rewards.push_back(gone ? 0.0 : static_cast<double>(std::get<std::int64_t>(actions[static_cast<std::size_t>(i)])));
  }
  ++t_;
  for (int i = 0; i < config_.n_entities; ++i) {
    b.observations.push_back(observation(i));
    Info info;
    if (has_exited(i)) info[kExitedKey] = "true";
    b.infos.push_back(std::move(info));
  }
  b.done = t_ >= config_.horizon;
  return b;
}

}  // namespace arena::envs
