#include "palg/error.hpp"

namespace palg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Config: return "config";
    case ErrorKind::Input: return "input";
    case ErrorKind::Format: return "format";
    case ErrorKind::Compatibility: return "compatibility";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Compatibility:
      return 2;
    case ErrorKind::Io:
    case ErrorKind::Format:
      return 3;
    default:
      return 1;
  }
}

}  // namespace palg
