#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace plus {

/// Exact (correctly rounded) parse of a complete token; nullopt otherwise.
std::optional<double> parse_double(std::string_view token);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// FNV-1a 64-bit over a byte string.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

}  // namespace plus
