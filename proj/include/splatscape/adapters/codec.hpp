#pragma once

#include <string>
#include <string_view>

#include "splatscape/io.hpp"

namespace splatscape {

/// Standard base64 with padding, no line breaks.
std::string base64_encode(const Bytes& bytes);
/// Rejects anything that is not canonical padded base64 (ProtocolError).
Bytes base64_decode(std::string_view text);

/// Lowercase hex SHA-256.
std::string sha256_hex(const Bytes& bytes);
std::string sha256_hex(std::string_view text);

}  // namespace splatscape
