#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace palg::cli {

// Runs one command line (without the program name). Returns the process exit
// code: 0 ok, 1 runtime/numeric, 2 config/validation, 3 I/O.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

// FNV-1a 64 of a byte string; used for config hashes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace palg::cli
