#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace palg {

enum class ErrorKind {
  Dimension,
  Numeric,
  Config,
  Input,
  Format,
  Compatibility,
  Contract,
  Protocol,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Process exit code for an error kind: 1 runtime/numeric, 2 config/validation, 3 I/O.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace palg
