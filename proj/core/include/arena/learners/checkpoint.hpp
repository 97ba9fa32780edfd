#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arena/common/bytes.hpp"
#include "arena/common/error.hpp"

namespace arena::learn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

/// Serialized policy state: header plus the flat parameter payload.
struct Checkpoint {
  std::string policy;
  std::string algorithm;
  std::uint64_t step_count = 0;
  std::vector<std::uint32_t> layers;
  std::vector<double> payload;

  bool operator==(const Checkpoint&) const = default;
};

Bytes encode_checkpoint(const Checkpoint& ckpt);
/// Throws CorruptCheckpoint on bad magic, version, length, or (when given) a different algorithm tag.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, std::string_view expected_algorithm = {});

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path, std::string_view expected_algorithm = {});

}  // namespace arena::learn
