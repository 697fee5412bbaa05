#pragma once

#include <array>
#include <charconv>
#include <string>

namespace supertc {

// Shortest decimal that round-trips to the same double.
inline std::string shortest_decimal(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

}  // namespace supertc
