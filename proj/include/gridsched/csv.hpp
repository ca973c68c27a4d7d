#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

namespace gridsched {

// Round-trip precision, '.' decimal separator regardless of locale.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_num(const std::optional<double>& v) { return v ? fmt_num(*v) : ""; }

}  // namespace gridsched
