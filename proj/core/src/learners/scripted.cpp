#include "arena/learners/scripted.hpp"

#include <cmath>
#include <string>

#include "arena/common/error.hpp"

namespace arena::learn {

ScriptKind parse_script_kind(std::string_view name) {
  if (name == "static") return ScriptKind::Static;
  if (name == "random") return ScriptKind::Random;
  throw Error("unknown scripted policy kind '" + std::string(name) + "' (expected static or random)");
}

std::string_view script_kind_name(ScriptKind kind) { return kind == ScriptKind::Static ? "static" : "random"; }

Value scripted_act(ScriptKind kind, const SpaceSpec& space, std::mt19937_64& rng) {
  if (kind == ScriptKind::Static) return null_action(space);
  if (space.is_discrete()) {
    std::uniform_int_distribution<std::int64_t> pick(0, space.as_discrete().n - 1);
    return pick(rng);
  }
  const auto& box = space.as_box();
  if (!std::isfinite(box.low) || !std::isfinite(box.high))
    throw Error("random scripted policy needs a bounded action space, got " + space.describe());
  std::uniform_real_distribution<double> u(box.low, box.high);
  Tensor t;
  t.shape = box.shape;
  t.data.resize(box.size());
  for (double& v : t.data) v = u(rng);
  return t;
}

}  // namespace arena::learn
