#include "splatscape/adapters/schema.hpp"

#include <set>

#include "splatscape/adapters/codec.hpp"
#include "splatscape/error.hpp"

namespace splatscape {

namespace {

using nlohmann::json;

const std::set<std::string> kAnnotations = {"$schema", "$id", "title", "description", "examples",
                                            "contentMediaType", "$comment"};
const std::set<std::string> kKeywords = {"type",  "properties", "required",  "additionalProperties",
                                         "items", "minItems",   "enum",      "const",
                                         "minLength", "minimum", "exclusiveMinimum", "contentEncoding"};

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer")
    return v.is_number_integer() || (v.is_number_float() && v.get<double>() == static_cast<long long>(v.get<double>()));
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  throw Error(ErrorCode::ConfigInvalid, "unknown schema type '" + type + "'");
}

void check(const json& schema, const json& v, const std::string& at, std::vector<std::string>& errors) {
  if (!schema.is_object()) throw Error(ErrorCode::ConfigInvalid, "schema at " + at + " is not an object");
  for (const auto& [key, _] : schema.items())
    if (!kKeywords.count(key) && !kAnnotations.count(key))
      throw Error(ErrorCode::ConfigInvalid, "unsupported schema keyword '" + key + "'");
  const std::string here = at.empty() ? "/" : at;

  if (const auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_array()) {
      for (const auto& t : *it) ok |= has_type(v, t.get<std::string>());
    } else {
      ok = has_type(v, it->get<std::string>());
    }
    if (!ok) {
      errors.push_back(here + ": expected type " + it->dump());
      return;
    }
  }
  if (const auto it = schema.find("enum"); it != schema.end()) {
    bool found = false;
    for (const auto& option : *it) found |= option == v;
    if (!found) errors.push_back(here + ": value not in enum");
  }
  if (const auto it = schema.find("const"); it != schema.end() && *it != v) errors.push_back(here + ": value differs from const");
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (const auto it = schema.find("minLength"); it != schema.end() && s.size() < it->get<std::size_t>())
      errors.push_back(here + ": shorter than minLength");
    if (const auto it = schema.find("contentEncoding"); it != schema.end()) {
      if (*it != "base64") throw Error(ErrorCode::ConfigInvalid, "unsupported contentEncoding " + it->dump());
      try {
        base64_decode(s);
      } catch (const Error&) {
        errors.push_back(here + ": not valid base64");
      }
    }
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (const auto it = schema.find("minimum"); it != schema.end() && x < it->get<double>())
      errors.push_back(here + ": below minimum");
    if (const auto it = schema.find("exclusiveMinimum"); it != schema.end() && x <= it->get<double>())
      errors.push_back(here + ": not above exclusiveMinimum");
  }
  if (v.is_object()) {
    if (const auto it = schema.find("required"); it != schema.end())
      for (const auto& key : *it)
        if (!v.contains(key.get<std::string>())) errors.push_back(here + ": missing required '" + key.get<std::string>() + "'");
    const json props = schema.value("properties", json::object());
    for (const auto& [key, value] : v.items()) {
      if (props.contains(key)) {
        check(props[key], value, at + "/" + key, errors);
      } else if (schema.value("additionalProperties", true) == false) {
        errors.push_back(here + ": unexpected property '" + key + "'");
      }
    }
  }
  if (v.is_array()) {
    if (const auto it = schema.find("minItems"); it != schema.end() && v.size() < it->get<std::size_t>())
      errors.push_back(here + ": fewer than minItems");
    if (const auto it = schema.find("items"); it != schema.end())
      for (std::size_t i = 0; i < v.size(); ++i) check(*it, v[i], at + "/" + std::to_string(i), errors);
  }
}

}  // namespace

std::vector<std::string> schema_errors(const json& schema, const json& instance) {
  std::vector<std::string> errors;
  check(schema, instance, "", errors);
  return errors;
}

}  // namespace splatscape
