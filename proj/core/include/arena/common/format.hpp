#pragma once

#include <charconv>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace arena {

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_doubles(std::span<const double> vs, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out.push_back(sep);
    out += format_double(vs[i]);
  }
  return out;
}

/// Parses a double written by format_double; returns false on malformed input.
inline bool parse_double(std::string_view s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace arena
