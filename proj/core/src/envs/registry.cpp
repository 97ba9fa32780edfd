#include "arena/envs/registry.hpp"

#include "arena/envs/cartpole.hpp"
#include "arena/envs/coopnav.hpp"
#include "arena/envs/echo.hpp"

namespace arena::envs {

std::unique_ptr<MultiEntityEnv> make_env(const std::string& kind, const EnvParams& params) {
  if (kind == "coopnav") return std::make_unique<CoopNav>(CoopNavConfig::from_params(params));
  if (kind == "echo") return std::make_unique<EchoEnv>(EchoEnvConfig::from_params(params));
  if (kind == "cartpole") return std::make_unique<CartPole>(params);
  throw InvalidEnvConfig("unknown environment kind '" + kind + "'");
}

std::vector<std::string> env_kinds() { return {"cartpole", "coopnav", "echo"}; }

EnvParams resolved_params(const std::string& kind, const EnvParams& params) {
  EnvParams resolved;
  if (kind == "coopnav") {
    CoopNavConfig::from_params(params, &resolved);
  } else if (kind == "echo") {
    EchoEnvConfig::from_params(params, &resolved);
  } else if (kind == "cartpole") {
    CartPole{params};
  } else {
    throw InvalidEnvConfig("unknown environment kind '" + kind + "'");
  }
  return resolved;
}

std::vector<EntitySpec> entity_specs(const std::string& kind, const EnvParams& params) {
  return make_env(kind, params)->entities();
}

}  // namespace arena::envs
