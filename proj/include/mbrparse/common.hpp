#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace mbrparse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a posterior is requested for a sentence with zero inside mass.
class Unparsable : public Error {
 public:
  using Error::Error;
};

enum class Nonterminal : std::int32_t {};
enum class Terminal : std::int32_t {};

constexpr std::size_t index(Nonterminal x) { return static_cast<std::size_t>(x); }
constexpr std::size_t index(Terminal x) { return static_cast<std::size_t>(x); }

// 17 significant digits; round-trips every double.
inline std::string format_prob(double p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", p);
  return buf;
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace mbrparse
