#include "arena/cli/metrics.hpp"

#include "arena/common/format.hpp"

namespace arena::cli {

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cells.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.emplace_back();
    } else {
      cells.back() += ch;
    }
  }
  return cells;
}

template <class T>
std::string opt(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

double to_double(const std::string& s) {
  double v = 0.0;
  if (!parse_double(s, v)) throw IoError("metrics: bad number '" + s + "'");
  return v;
}

std::optional<double> opt_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return to_double(s);
}

std::optional<std::uint32_t> opt_u32(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return static_cast<std::uint32_t>(std::stoul(s));
}

}  // namespace

std::string format_metrics_row(const orch::MetricsRow& r) {
  std::string line;
  line += format_double(r.wall_time) + ',';
  line += std::to_string(r.round) + ',';
  line += csv_cell(r.kind) + ',';
  line += csv_cell(r.policy) + ',';
  line += opt(r.worker) + ',';
  line += opt(r.env) + ',';
  line += std::to_string(r.env_steps) + ',';
  line += std::to_string(r.grad_steps) + ',';
  line += opt(r.episode_return) + ',';
  line += opt(r.loss_policy) + ',';
  line += opt(r.loss_value) + ',';
  line += opt(r.entropy) + ',';
  line += csv_cell(r.env_config);
  return line;
}

orch::MetricsRow parse_metrics_row(const std::string& line) {
  const auto c = split_csv(line);
  if (c.size() != 13) throw IoError("metrics: expected 13 columns, got " + std::to_string(c.size()));
  try {
    orch::MetricsRow r;
    r.wall_time = to_double(c[0]);
    r.round = static_cast<std::uint32_t>(std::stoul(c[1]));
    r.kind = c[2];
    r.policy = c[3];
    r.worker = opt_u32(c[4]);
    r.env = opt_u32(c[5]);
    r.env_steps = std::stoull(c[6]);
    r.grad_steps = std::stoull(c[7]);
    r.episode_return = opt_double(c[8]);
    r.loss_policy = opt_double(c[9]);
    r.loss_value = opt_double(c[10]);
    r.entropy = opt_double(c[11]);
    r.env_config = c[12];
    return r;
  } catch (const std::logic_error&) {
    throw IoError("metrics: malformed row '" + line + "'");
  }
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : path_(path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  out_.open(path, std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << kMetricsHeader << '\n';
  out_.flush();
}

MetricsWriter::~MetricsWriter() {
  if (out_.is_open()) out_.close();
}

void MetricsWriter::write(const orch::MetricsRow& row) {
  out_ << format_metrics_row(row) << '\n';
  ++rows_;
  if (row.kind == "episode") out_.flush();
  if (!out_) throw IoError("write to " + path_.string() + " failed");
}

void MetricsWriter::close() {
  out_.flush();
  if (!out_) throw IoError("write to " + path_.string() + " failed");
  out_.close();
}

std::vector<orch::MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw IoError(path.string() + ": unexpected header");
  std::vector<orch::MetricsRow> out;
  while (std::getline(in, line)) out.push_back(parse_metrics_row(line));
  return out;
}

}  // namespace arena::cli
