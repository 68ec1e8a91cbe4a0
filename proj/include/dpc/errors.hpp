#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace dpc {

// Error taxonomy mirrored by the CLI exit codes: config -> 2, numeric -> 3, io -> 4.
// Shape and contract violations are configuration-class mistakes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};

struct ShapeError : ConfigError {
  using ConfigError::ConfigError;
};

struct ContractError : ConfigError {
  using ConfigError::ConfigError;
};

struct NumericError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

namespace detail {

inline void str_append(std::ostringstream&) {}

template <typename T, typename... Rest>
void str_append(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  str_append(os, rest...);
}

}  // namespace detail

// Small concatenating formatter for error messages: msg("bad shape ", r, "x", c).
template <typename... Args>
std::string msg(const Args&... args) {
  std::ostringstream os;
  detail::str_append(os, args...);
  return os.str();
}

}  // namespace dpc
