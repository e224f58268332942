#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace rayfp {

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

/// Strict parse of a whole field; false on trailing garbage.
inline bool parse_double(const std::string& text, double& out) {
  if (text == "nan") {
    out = std::nan("");
    return true;
  }
  if (text == "inf" || text == "-inf") {
    out = text[0] == '-' ? -INFINITY : INFINITY;
    return true;
  }
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace rayfp
