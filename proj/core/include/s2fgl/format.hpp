#pragma once

#include <charconv>
#include <string>

namespace s2fgl {

// Shortest round-trip decimal form; stable across reruns, so emitted files
// diff cleanly.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace s2fgl
