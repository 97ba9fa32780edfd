#pragma once

#include "arena/common/params.hpp"

namespace arena {

using EnvParams = Params;
using InvalidEnvConfig = InvalidParams;

}  // namespace arena
