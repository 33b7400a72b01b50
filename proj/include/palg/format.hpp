#pragma once

#include <cstdio>
#include <string>

namespace palg {

// Compact, locale-independent rendering used in every TSV output.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace palg
