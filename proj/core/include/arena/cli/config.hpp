#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "arena/common/error.hpp"
#include "arena/orchestrator/round.hpp"
#include "arena/routing/plan.hpp"
#include "arena/runtime/comm.hpp"
#include "arena/schemes/curriculum.hpp"

namespace arena::cli {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed document; `location` is "line L, column C" or a file path.
class ParseError : public ConfigError {
 public:
  ParseError(std::string location, const std::string& what)
      : ConfigError(location + ": " + what), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

/// Well-formed document with an invalid field; `field` is a path such as "matches[0]".
class ValidationError : public ConfigError {
 public:
  ValidationError(std::string field, std::string reason, const std::string& detail = {})
      : ConfigError(field + ": " + reason + (detail.empty() ? "" : " (" + detail + ")")),
        field_(std::move(field)),
        reason_(std::move(reason)) {}
  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

/// Generates all pairwise matches between the listed policies.
struct RoundRobinConfig {
  std::vector<std::string> policies;
  std::string env;
  EnvParams env_config;
  int team_slots = 1;
};

struct RoundSpec {
  std::uint64_t steps = 0;
  EnvParams env_overrides;
};

enum class ScheduleKind { Rounds, Curriculum, Evolution };

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::Rounds;
  std::vector<RoundSpec> rounds;
  schemes::CurriculumSchedule curriculum;
  std::uint64_t steps_per_round = 0;
  std::vector<std::string> members;
  std::uint64_t total_steps = 0;
  std::uint64_t generation_period = 0;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  rt::TransportMode transport = rt::TransportMode::Multiprocess;
  double timeout_seconds = 60.0;
  std::map<std::string, routing::PolicySpec> policies;
  /// Matches as written; generated round-robin matches are appended after them.
  std::vector<routing::MatchEntry> matches;
  std::optional<RoundRobinConfig> round_robin;
  int replication = 1;
  ScheduleConfig schedule;
  /// One update row every this many gradient steps per worker (0 disables update rows).
  std::uint32_t update_log_every = 1;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// The configuration with every default written out; parsing it yields the same RunConfig.
std::string effective_config_json(const RunConfig& config);

routing::MatchSpec match_spec(const RunConfig& config);
routing::ProcessPlan build_plan(const RunConfig& config);
std::vector<orch::RoundConfig> build_schedule(const RunConfig& config);

/// Transport after applying ARENA_TRANSPORT and the --deterministic flag, in that order.
rt::TransportMode effective_transport(const RunConfig& config, bool force_deterministic);

}  // namespace arena::cli
