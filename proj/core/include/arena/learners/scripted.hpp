#pragma once

#include <random>
#include <string_view>

#include "arena/interface/space.hpp"

namespace arena::learn {

enum class ScriptKind { Static, Random };

/// "static" or "random"; throws arena::Error otherwise.
ScriptKind parse_script_kind(std::string_view name);
std::string_view script_kind_name(ScriptKind kind);

/// Static returns the null action; random draws uniformly from the space (boxes need finite bounds).
Value scripted_act(ScriptKind kind, const SpaceSpec& space, std::mt19937_64& rng);

}  // namespace arena::learn
