#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "arena/common/bytes.hpp"
#include "arena/interface/space.hpp"

namespace arena {

using Info = std::map<std::string, std::string>;

/// Info key set on an entity that has left the episode early; its observation is then all zeros.
inline constexpr const char* kExitedKey = "exited";
/// Info key set when the episode ended only because its step limit was reached.
inline constexpr const char* kTimeLimitKey = "time_limit";

/// One lock-step exchange result: per-entity lists plus the single shared done flag.
struct StepBatch {
  std::vector<Value> observations;
  std::vector<double> rewards;
  bool done = false;
  std::vector<Info> infos;

  std::size_t size() const { return observations.size(); }
  bool operator==(const StepBatch&) const = default;
};

struct LengthMismatch {
  std::size_t expected = 0;
  std::size_t got = 0;
  bool operator==(const LengthMismatch&) const = default;
};

struct SpaceViolation {
  std::uint32_t entity_id = 0;
  bool operator==(const SpaceViolation&) const = default;
};

using BatchError = std::variant<LengthMismatch, SpaceViolation>;

/// Checks list lengths and observation membership. Exited entities (info "exited"="true")
/// carry the null observation and are accepted. Never throws.
std::optional<BatchError> validate_batch(std::span<const EntitySpec> specs, const StepBatch& batch);

std::string describe(const BatchError& err);

/// Canonical binary frame: u32 entity count; per entity a space tag, shape, f64 payload and
/// f64 reward; one done byte; per entity length-prefixed info pairs. All little-endian.
Bytes encode_batch(const StepBatch& batch);
StepBatch decode_batch(std::span<const std::uint8_t> frame);

void write_value(ByteWriter& w, const Value& v);
Value read_value(ByteReader& r);

}  // namespace arena
