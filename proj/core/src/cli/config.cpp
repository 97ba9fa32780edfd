#include "arena/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "arena/envs/registry.hpp"
#include "arena/learners/agent.hpp"
#include "arena/learners/scripted.hpp"
#include "arena/schemes/population.hpp"

namespace arena::cli {

namespace {

using nlohmann::json;

std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Typed access to the members of one JSON object; remembers which keys were read so that the
/// rest can be rejected.
class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(display(), "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ValidationError(field(key), "missing");
    return j_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  std::uint64_t uint(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ValidationError(field(key), "missing");
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ValidationError(field(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ValidationError(field(key), "missing");
    }
    const json& v = j_.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) throw ValidationError(field(key), "expected a number");
    return v.get<double>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ValidationError(field(key), "missing");
    }
    const json& v = j_.at(key);
    if (!v.is_string()) throw ValidationError(field(key), "expected a string");
    return v.get<std::string>();
  }

  Params params(const std::string& key) {
    Params out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_object()) throw ValidationError(field(key), "expected an object of numbers");
    for (const auto& [k, x] : v.items()) {
      if (!x.is_number() && !x.is_boolean()) throw ValidationError(field(key) + "." + k, "expected a number");
      out[k] = x.is_boolean() ? (x.get<bool>() ? 1.0 : 0.0) : x.get<double>();
      if (!std::isfinite(out[k])) throw ValidationError(field(key) + "." + k, "expected a finite number");
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw ValidationError(field(key), "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) throw ValidationError(field(key), "expected an array of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ValidationError(field(k), "unknown key");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "document" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

void check_name(const std::string& name, const std::string& field) {
  if (name.empty()) throw ValidationError(field, "policy names must be nonempty");
  for (char ch : name) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_' ||
                    ch == '-' || ch == '.';
    if (!ok) throw ValidationError(field, "policy names may only use letters, digits, '_', '-' and '.'", name);
  }
}

learn::PolicyMode parse_mode(const std::string& s, const std::string& field) {
  if (s == "trainable") return learn::PolicyMode::Trainable;
  if (s == "frozen") return learn::PolicyMode::Frozen;
  if (s == "scripted") return learn::PolicyMode::Scripted;
  throw ValidationError(field, "mode must be trainable, frozen or scripted", s);
}

std::string mode_name(learn::PolicyMode m) {
  switch (m) {
    case learn::PolicyMode::Trainable:
      return "trainable";
    case learn::PolicyMode::Frozen:
      return "frozen";
    case learn::PolicyMode::Scripted:
      return "scripted";
  }
  return "trainable";
}

routing::PolicySpec parse_policy(const json& j, const std::string& path) {
  Object o(j, path);
  routing::PolicySpec p;
  p.mode = parse_mode(o.string("mode", "trainable"), o.field("mode"));
  p.algorithm = o.string("algorithm");
  p.hyper = o.params("hyper");
  p.checkpoint = o.string("checkpoint", "");
  o.reject_unknown();

  if (p.mode == learn::PolicyMode::Scripted) {
    try {
      learn::parse_script_kind(p.algorithm);
    } catch (const Error& e) {
      throw ValidationError(o.field("algorithm"), "scripted policies use static or random", p.algorithm);
    }
    if (!p.hyper.empty()) throw ValidationError(o.field("hyper"), "scripted policies take no hyperparameters");
    return p;
  }
  Params resolved;
  try {
    if (p.algorithm == "sac" || p.algorithm == "masac") {
      learn::sac_config_from(p.hyper, &resolved);
    } else if (p.algorithm == "ppo") {
      learn::ppo_config_from(p.hyper, &resolved);
    } else {
      throw ValidationError(o.field("algorithm"), "algorithm must be sac, masac or ppo", p.algorithm);
    }
  } catch (const InvalidParams& e) {
    throw ValidationError(o.field("hyper"), "invalid hyperparameters", e.what());
  }
  p.hyper = std::move(resolved);
  if (p.mode == learn::PolicyMode::Frozen && p.checkpoint.empty())
    throw ValidationError(o.field("checkpoint"), "frozen policies need a checkpoint");
  return p;
}

EnvParams check_env(const std::string& kind, const EnvParams& config, const std::string& path) {
  const auto kinds = envs::env_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    throw ValidationError(path + ".env", "unknown environment kind", kind);
  try {
    return envs::resolved_params(kind, config);
  } catch (const Error& e) {
    throw ValidationError(path + ".env_config", "invalid environment parameters", e.what());
  }
}

routing::Slot parse_slot(const json& j, const std::string& path) {
  Object o(j, path);
  routing::Slot s;
  s.policy = o.string("policy");
  const bool single = o.has("single");
  const bool group = o.has("group");
  if (single == group) throw ValidationError(path, "a slot names exactly one of 'single' or 'group'");
  if (single) {
    s.assignment = routing::EntityAssignment::single(static_cast<std::uint32_t>(o.uint("single")));
  } else {
    const json& g = o.at("group");
    if (!g.is_array() || g.empty()) throw ValidationError(o.field("group"), "expected a nonempty array of entity ids");
    std::vector<std::uint32_t> ids;
    for (const auto& x : g) {
      if (!x.is_number_unsigned()) throw ValidationError(o.field("group"), "expected a nonempty array of entity ids");
      ids.push_back(x.get<std::uint32_t>());
    }
    s.assignment = routing::EntityAssignment::group(std::move(ids));
  }
  const auto k = o.uint("frameskip", 1);
  if (k < 1) throw ValidationError(o.field("frameskip"), "must be >= 1");
  s.frameskip = static_cast<int>(k);
  o.reject_unknown();
  return s;
}

routing::MatchEntry parse_match(const json& j, const std::string& path,
                                const std::map<std::string, routing::PolicySpec>& policies) {
  Object o(j, path);
  routing::MatchEntry m;
  m.env_kind = o.string("env");
  m.env_config = o.params("env_config");
  const json& slots = o.at("slots");
  if (!slots.is_array() || slots.empty()) throw ValidationError(o.field("slots"), "expected a nonempty array");
  for (std::size_t i = 0; i < slots.size(); ++i) m.slots.push_back(parse_slot(slots[i], index_path(o.field("slots"), i)));
  o.reject_unknown();

  for (const auto& s : m.slots) {
    if (!policies.count(s.policy)) throw ValidationError(path, "unknown policy", s.policy);
  }
  m.env_config = check_env(m.env_kind, m.env_config, path);
  try {
    routing::resolve_plan(routing::MatchSpec{policies, {m}, 1});
  } catch (const Error& e) {
    throw ValidationError(path, "invalid assignment", e.what());
  }
  return m;
}

RoundRobinConfig parse_round_robin(const json& j, const std::map<std::string, routing::PolicySpec>& policies) {
  Object o(j, "round_robin");
  RoundRobinConfig rr;
  rr.policies = o.strings("policies");
  rr.env = o.string("env");
  rr.env_config = o.params("env_config");
  rr.team_slots = static_cast<int>(o.uint("team_slots", 1));
  o.reject_unknown();
  for (const auto& p : rr.policies) {
    if (!policies.count(p)) throw ValidationError("round_robin.policies", "unknown policy", p);
  }
  rr.env_config = check_env(rr.env, rr.env_config, "round_robin");
  try {
    const auto entries = routing::round_robin_pairings(rr.policies, rr.team_slots, rr.env, rr.env_config);
    routing::resolve_plan(routing::MatchSpec{policies, entries, 1});
  } catch (const Error& e) {
    throw ValidationError("round_robin", "invalid pairing", e.what());
  }
  return rr;
}

ScheduleConfig parse_schedule(Object& root, const std::map<std::string, routing::PolicySpec>& policies) {
  ScheduleConfig s;
  const int present = int(root.has("rounds")) + int(root.has("curriculum")) + int(root.has("evolution"));
  if (present != 1) throw ValidationError("rounds", "exactly one of rounds, curriculum or evolution is required");

  if (root.has("rounds")) {
    s.kind = ScheduleKind::Rounds;
    const json& rounds = root.at("rounds");
    if (!rounds.is_array() || rounds.empty()) throw ValidationError("rounds", "expected a nonempty array");
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      Object o(rounds[i], index_path("rounds", i));
      RoundSpec r;
      r.steps = o.uint("steps");
      if (r.steps < 1) throw ValidationError(o.field("steps"), "must be >= 1");
      r.env_overrides = o.params("env_overrides");
      o.reject_unknown();
      s.rounds.push_back(std::move(r));
    }
  } else if (root.has("curriculum")) {
    s.kind = ScheduleKind::Curriculum;
    Object o(root.at("curriculum"), "curriculum");
    const auto defaults = schemes::default_penalty_schedule();
    s.curriculum.key = o.string("key", defaults.key);
    if (o.has("values")) {
      const json& v = o.at("values");
      if (!v.is_array()) throw ValidationError(o.field("values"), "expected an array of numbers");
      for (const auto& x : v) {
        if (!x.is_number()) throw ValidationError(o.field("values"), "expected an array of numbers");
        s.curriculum.values.push_back(x.get<double>());
      }
    } else {
      s.curriculum.values = defaults.values;
    }
    s.steps_per_round = o.uint("steps_per_round");
    o.reject_unknown();
    try {
      s.curriculum.validate();
    } catch (const Error& e) {
      throw ValidationError("curriculum", "invalid schedule", e.what());
    }
    if (s.steps_per_round < 1) throw ValidationError("curriculum.steps_per_round", "must be >= 1");
  } else {
    s.kind = ScheduleKind::Evolution;
    Object o(root.at("evolution"), "evolution");
    s.members = o.strings("members");
    s.total_steps = o.uint("total_steps");
    s.generation_period = o.uint("generation_period");
    o.reject_unknown();
    if (s.members.size() < 2) throw ValidationError("evolution.members", "a population needs at least two members");
    for (const auto& m : s.members) {
      auto it = policies.find(m);
      if (it == policies.end()) throw ValidationError("evolution.members", "unknown policy", m);
      if (it->second.mode != learn::PolicyMode::Trainable)
        throw ValidationError("evolution.members", "population members must be trainable", m);
    }
    if (std::set<std::string>(s.members.begin(), s.members.end()).size() != s.members.size())
      throw ValidationError("evolution.members", "members must be distinct");
    if (s.total_steps < 1) throw ValidationError("evolution.total_steps", "must be >= 1");
    if (s.generation_period < 1) throw ValidationError("evolution.generation_period", "must be >= 1");
  }
  return s;
}

json params_json(const Params& p) {
  json out = json::object();
  for (const auto& [k, v] : p) out[k] = v;
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(location_of(text, e.byte), e.what());
  }

  Object root(doc, "");
  RunConfig c;
  c.schema_version = static_cast<int>(root.uint("schema_version"));
  if (c.schema_version != kSchemaVersion)
    throw ValidationError("schema_version", "unsupported schema version", std::to_string(c.schema_version));
  c.seed = root.uint("seed", 0);
  c.output_dir = root.string("output_dir", c.output_dir);
  if (c.output_dir.empty()) throw ValidationError("output_dir", "must be nonempty");
  const std::string transport = root.string("transport", rt::transport_name(c.transport));
  try {
    c.transport = rt::parse_transport(transport);
  } catch (const Error&) {
    throw ValidationError("transport", "must be deterministic or multiprocess", transport);
  }
  c.timeout_seconds = root.number("timeout_seconds", c.timeout_seconds);
  if (!(c.timeout_seconds > 0.0)) throw ValidationError("timeout_seconds", "must be > 0");
  c.replication = static_cast<int>(root.uint("replication", 1));
  if (c.replication < 1) throw ValidationError("replication", "must be >= 1");

  const json& policies = root.at("policies");
  if (!policies.is_object() || policies.empty()) throw ValidationError("policies", "expected a nonempty object");
  for (const auto& [name, p] : policies.items()) {
    check_name(name, "policies." + name);
    c.policies[name] = parse_policy(p, "policies." + name);
  }

  if (root.has("matches")) {
    const json& matches = root.at("matches");
    if (!matches.is_array()) throw ValidationError("matches", "expected an array");
    for (std::size_t i = 0; i < matches.size(); ++i)
      c.matches.push_back(parse_match(matches[i], index_path("matches", i), c.policies));
  }
  if (root.has("round_robin")) c.round_robin = parse_round_robin(root.at("round_robin"), c.policies);
  if (c.matches.empty() && !c.round_robin) throw ValidationError("matches", "no matches declared");

  c.schedule = parse_schedule(root, c.policies);

  if (root.has("metrics")) {
    Object m(root.at("metrics"), "metrics");
    c.update_log_every = static_cast<std::uint32_t>(m.uint("update_every", c.update_log_every));
    m.reject_unknown();
  }
  root.reject_unknown();

  try {
    build_plan(c);
  } catch (const Error& e) {
    throw ValidationError("matches", "invalid plan", e.what());
  }
  if (c.schedule.kind == ScheduleKind::Evolution) {
    const auto plan = build_plan(c);
    for (const auto& m : c.schedule.members) {
      if (plan.policy_groups.at(m).empty())
        throw ValidationError("evolution.members", "member controls no entities", m);
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string effective_config_json(const RunConfig& c) {
  json doc;
  doc["schema_version"] = c.schema_version;
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["transport"] = rt::transport_name(c.transport);
  doc["timeout_seconds"] = c.timeout_seconds;
  doc["replication"] = c.replication;
  json policies = json::object();
  for (const auto& [name, p] : c.policies) {
    policies[name] = {{"mode", mode_name(p.mode)},
                      {"algorithm", p.algorithm},
                      {"hyper", params_json(p.hyper)},
                      {"checkpoint", p.checkpoint}};
  }
  doc["policies"] = policies;
  json matches = json::array();
  for (const auto& m : c.matches) {
    json slots = json::array();
    for (const auto& s : m.slots) {
      json slot = {{"policy", s.policy}, {"frameskip", s.frameskip}};
      if (s.assignment.grouped) {
        slot["group"] = s.assignment.entities;
      } else {
        slot["single"] = s.assignment.entities.front();
      }
      slots.push_back(slot);
    }
    matches.push_back({{"env", m.env_kind}, {"env_config", params_json(m.env_config)}, {"slots", slots}});
  }
  doc["matches"] = matches;
  if (c.round_robin) {
    doc["round_robin"] = {{"policies", c.round_robin->policies},
                          {"env", c.round_robin->env},
                          {"env_config", params_json(c.round_robin->env_config)},
                          {"team_slots", c.round_robin->team_slots}};
  }
  switch (c.schedule.kind) {
    case ScheduleKind::Rounds: {
      json rounds = json::array();
      for (const auto& r : c.schedule.rounds)
        rounds.push_back({{"steps", r.steps}, {"env_overrides", params_json(r.env_overrides)}});
      doc["rounds"] = rounds;
      break;
    }
    case ScheduleKind::Curriculum:
      doc["curriculum"] = {{"key", c.schedule.curriculum.key},
                           {"values", c.schedule.curriculum.values},
                           {"steps_per_round", c.schedule.steps_per_round}};
      break;
    case ScheduleKind::Evolution:
      doc["evolution"] = {{"members", c.schedule.members},
                          {"total_steps", c.schedule.total_steps},
                          {"generation_period", c.schedule.generation_period}};
      break;
  }
  doc["metrics"] = {{"update_every", c.update_log_every}};
  return doc.dump(2) + "\n";
}

routing::MatchSpec match_spec(const RunConfig& c) {
  routing::MatchSpec spec;
  spec.policies = c.policies;
  spec.matches = c.matches;
  if (c.round_robin) {
    const auto& rr = *c.round_robin;
    auto generated = routing::round_robin_pairings(rr.policies, rr.team_slots, rr.env, rr.env_config);
    spec.matches.insert(spec.matches.end(), generated.begin(), generated.end());
  }
  spec.replication = c.replication;
  return spec;
}

routing::ProcessPlan build_plan(const RunConfig& c) { return routing::resolve_plan(match_spec(c)); }

std::vector<orch::RoundConfig> build_schedule(const RunConfig& c) {
  switch (c.schedule.kind) {
    case ScheduleKind::Curriculum:
      return schemes::curriculum_rounds(c.schedule.curriculum, c.schedule.steps_per_round);
    case ScheduleKind::Evolution: {
      return schemes::generation_schedule(c.schedule.total_steps, c.schedule.generation_period);
    }
    case ScheduleKind::Rounds:
      break;
  }
  std::vector<orch::RoundConfig> out;
  for (std::size_t i = 0; i < c.schedule.rounds.size(); ++i)
    out.push_back({c.schedule.rounds[i].steps, static_cast<std::uint32_t>(i), c.schedule.rounds[i].env_overrides});
  return out;
}

rt::TransportMode effective_transport(const RunConfig& c, bool force_deterministic) {
  if (force_deterministic) return rt::TransportMode::Deterministic;
  if (const char* env = std::getenv("ARENA_TRANSPORT"); env && *env) {
    try {
      return rt::parse_transport(env);
    } catch (const Error&) {
      throw ValidationError("ARENA_TRANSPORT", "must be deterministic or multiprocess", env);
    }
  }
  return c.transport;
}

}  // namespace arena::cli
