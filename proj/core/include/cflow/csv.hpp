#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace cflow {

/// Shortest decimal string that round-trips the exact double (via
/// std::to_chars), so repeated runs emit byte-identical files.
std::string format_double(double value);

/// Empty string for absent values.
std::string format_optional(const std::optional<double>& value);

std::string format_int(std::int64_t value);

}  // namespace cflow
