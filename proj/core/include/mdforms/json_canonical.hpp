#pragma once

#include <string>

namespace mdforms {

/// Reserializes a JSON document in canonical form: object keys sorted, no
/// insignificant whitespace, numbers printed with 17 significant digits.
/// Throws ParseError on malformed input.
std::string canonical_json(const std::string& text);

/// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Formats a double with 17 significant digits.
std::string format_double(double value);

}  // namespace mdforms
