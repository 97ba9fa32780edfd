#pragma once

#include <map>
#include <set>
#include <string>

#include "arena/common/bytes.hpp"
#include "arena/common/error.hpp"
#include "arena/common/format.hpp"

namespace arena {

/// Flat numeric configuration blob (environment parameters, algorithm hyperparameters).
using Params = std::map<std::string, double>;

class InvalidParams : public Error {
 public:
  using Error::Error;
};

/// Reads keys out of a Params map, remembering which ones were consumed so that unknown keys
/// can be rejected.
class ParamReader {
 public:
  explicit ParamReader(const Params& p) : params_(p) {}

  double get(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = params_.find(key);
    const double v = it == params_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
  }

  bool has(const std::string& key) const { return params_.count(key) != 0; }

  /// Every key read so far with the value it resolved to, defaults included.
  const Params& resolved() const { return resolved_; }

  void reject_unknown(const std::string& context) const {
    for (const auto& [k, v] : params_) {
      if (!used_.count(k)) throw InvalidParams(context + ": unknown parameter '" + k + "'");
    }
  }

 private:
  const Params& params_;
  std::set<std::string> used_;
  Params resolved_;
};

inline void write_params(ByteWriter& w, const Params& p) {
  w.u32(static_cast<std::uint32_t>(p.size()));
  for (const auto& [k, v] : p) {
    w.str(k);
    w.f64(v);
  }
}

inline Params read_params(ByteReader& r) {
  Params p;
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string k = r.str();
    p[std::move(k)] = r.f64();
  }
  return p;
}

/// "key=value;key=value" in key order with shortest round-trip numbers.
inline std::string format_params(const Params& p) {
  std::string out;
  for (const auto& [k, v] : p) {
    if (!out.empty()) out += ';';
    out += k + "=" + format_double(v);
  }
  return out;
}

}  // namespace arena
