#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "arena/common/error.hpp"
#include "arena/orchestrator/events.hpp"

namespace arena::cli {

class IoError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kMetricsHeader =
    "wall_time,round,kind,policy,worker,env,env_steps,grad_steps,episode_return,loss_policy,loss_value,entropy,"
    "env_config";

/// One CSV line (without newline) in the fixed column order; absent values are empty cells.
std::string format_metrics_row(const orch::MetricsRow& row);
orch::MetricsRow parse_metrics_row(const std::string& line);

/// Append-only metrics CSV. The header is written on open; the file is flushed after every
/// episode row and on close.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  ~MetricsWriter();
  MetricsWriter(const MetricsWriter&) = delete;
  MetricsWriter& operator=(const MetricsWriter&) = delete;

  void write(const orch::MetricsRow& row);
  void close();
  std::uint64_t rows() const { return rows_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t rows_ = 0;
};

std::vector<orch::MetricsRow> read_metrics(const std::filesystem::path& path);

}  // namespace arena::cli
