#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace splatscape {

/// Validates against the JSON Schema subset the protocol schemas use: type,
/// properties, required, additionalProperties (boolean), items, minItems,
/// enum, const, minLength, minimum, exclusiveMinimum, and
/// contentEncoding "base64" (checked, unlike most validators). Unknown
/// keywords throw ConfigInvalid so a schema cannot silently outgrow this
/// checker. Returns one message per violation, prefixed by a JSON pointer.
std::vector<std::string> schema_errors(const nlohmann::json& schema, const nlohmann::json& instance);

}  // namespace splatscape
