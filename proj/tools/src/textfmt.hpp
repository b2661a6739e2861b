#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace pdfscan::tools {

// Canonical numeric formatting for CSV artifacts: %.9g (stable across
// reruns), with NaN always spelled "nan".
inline std::string fmt_g(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string fmt_size(std::size_t v) { return std::to_string(v); }

}  // namespace pdfscan::tools
