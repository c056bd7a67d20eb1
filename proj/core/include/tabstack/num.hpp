#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace tabstack {

// Shortest decimal string that parses back to the same double. Used by model
// serialization and artifact CSVs so round-trips are bit-exact.
inline std::string format_roundtrip(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return buf;
}

inline std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

inline double parse_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

}  // namespace tabstack
