#pragma once

#include <charconv>
#include <string>

namespace esrate {

//! 17 significant digits, '.' decimal point, locale independent.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

}  // namespace esrate
