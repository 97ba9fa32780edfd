#pragma once

#include <memory>
#include <string>
#include <vector>

#include "arena/envs/params.hpp"
#include "arena/interface/env.hpp"

namespace arena::envs {

/// Builds an environment by kind name ("coopnav", "echo", "cartpole").
std::unique_ptr<MultiEntityEnv> make_env(const std::string& kind, const EnvParams& params);

std::vector<std::string> env_kinds();

/// The parameters with every default written out; throws like make_env on invalid input.
EnvParams resolved_params(const std::string& kind, const EnvParams& params);

/// Entity specs of an env kind without keeping the instance around.
std::vector<EntitySpec> entity_specs(const std::string& kind, const EnvParams& params);

}  // namespace arena::envs
