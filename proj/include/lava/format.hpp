#pragma once

#include <cstdio>
#include <string>

namespace lava {

/// Round-trippable decimal rendering (%.17g); infinities print as "inf".
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace lava
