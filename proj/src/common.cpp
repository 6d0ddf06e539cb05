#include "spectemp/common.hpp"

#include <cmath>
#include <cstdio>

namespace spectemp {

namespace {

// Shortest round-trippable decimal for v, without scientific notation for
// the magnitudes timestamps live in.
std::string shortest(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

}  // namespace

std::string fmt_seconds(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  return shortest(v);
}

std::string fmt_frame_ts(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
  }
  return shortest(v);
}

}  // namespace spectemp
