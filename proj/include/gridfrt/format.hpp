#pragma once

#include <cstdio>
#include <string>

namespace gridfrt {

/// Fixed CSV number format: 9 significant digits.
inline std::string fmt_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x == 0.0 ? 0.0 : x);
  return buf;
}

}  // namespace gridfrt
