#include "splatscape/adapters/protocol.hpp"

#include "splatscape/adapters/codec.hpp"
#include "splatscape/error.hpp"
#include "splatscape/io.hpp"

namespace splatscape {

namespace {

using nlohmann::json;

const json& field(const json& body, const char* key, json::value_t type) {
  if (!body.is_object()) throw Error(ErrorCode::ProtocolError, "body is not a JSON object");
  const auto it = body.find(key);
  if (it == body.end()) throw Error(ErrorCode::ProtocolError, std::string("missing field '") + key + "'");
  const bool ok = type == json::value_t::number_float ? it->is_number() : it->type() == type;
  if (!ok) throw Error(ErrorCode::ProtocolError, std::string("field '") + key + "' has the wrong type");
  return *it;
}

std::string text_field(const json& body, const char* key) {
  return field(body, key, json::value_t::string).get<std::string>();
}

// Decoding errors of any kind surface as protocol errors naming the field.
template <typename F>
auto decode_field(const json& body, const char* key, F&& decode) {
  const std::string text = text_field(body, key);
  try {
    return decode(base64_decode(text));
  } catch (const Error& e) {
    throw Error(ErrorCode::ProtocolError, std::string("field '") + key + "': " + e.what());
  }
}

Image rgb_of(Image image) {
  if (image.channels() == 3) return image;
  if (image.channels() != 1) throw Error(ErrorCode::ProtocolError, "image must be gray or RGB");
  Image out(image.width(), image.height(), 3);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(x, y);
  return out;
}

Image decode_image(const json& body, const char* key) {
  return decode_field(body, key, [](const Bytes& b) { return rgb_of(decode_png(b)); });
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Inpaint: return "inpaint";
    case Role::Depth: return "depth";
    case Role::Caption: return "caption";
    case Role::Vqa: return "vqa";
  }
  return "unknown";
}

Role role_from_string(std::string_view name) {
  for (Role r : {Role::Inpaint, Role::Depth, Role::Caption, Role::Vqa})
    if (to_string(r) == name) return r;
  throw Error(ErrorCode::ConfigInvalid, "unknown adapter role '" + std::string(name) + "'");
}

ModelEndpoint::ModelEndpoint(Role role, std::string url, double timeout_seconds, int retries)
    : role_(role), url_(std::move(url)), timeout_(timeout_seconds), retries_(retries) {
  if (retries_ < 0) throw Error(ErrorCode::ConfigInvalid, "endpoint retries must be non-negative");
  if (!(timeout_ > 0.0)) throw Error(ErrorCode::ConfigInvalid, "endpoint timeout must be positive");
  if (url_.rfind("http://", 0) != 0)
    throw Error(ErrorCode::ConfigInvalid, "endpoint url must start with http:// (got '" + url_ + "')");
}

std::string vqa_prompt(std::string_view question) {
  return "<image> USER: " + std::string(question) + ", just answer with yes or no? ASSISTANT:";
}

json inpaint_request(const Image& image, const Mask& mask, const std::string& prompt) {
  return {{"image", base64_encode(encode_png(image))}, {"mask", base64_encode(encode_mask_png(mask))},
          {"prompt", prompt}};
}

InpaintRequest parse_inpaint_request(const json& body) {
  InpaintRequest r;
  r.image = decode_image(body, "image");
  r.mask = decode_field(body, "mask", [](const Bytes& b) { return decode_mask_png(b); });
  r.prompt = body.contains("prompt") ? text_field(body, "prompt") : std::string();
  if (r.mask.width() != r.image.width() || r.mask.height() != r.image.height())
    throw Error(ErrorCode::ProtocolError, "mask and image sizes differ");
  return r;
}

json inpaint_response(const Image& image) { return {{"image", base64_encode(encode_png(image))}}; }

Image parse_inpaint_response(const json& body) { return decode_image(body, "image"); }

json depth_request(const Image& image) { return {{"image", base64_encode(encode_png(image))}}; }

Image parse_depth_request(const json& body) { return decode_image(body, "image"); }

json depth_response(const DepthEstimate& estimate) {
  json out = {{"depth", base64_encode(encode_pfm(estimate.depth))}};
  if (estimate.focal) out["focal"] = *estimate.focal;
  return out;
}

DepthEstimate parse_depth_response(const json& body) {
  DepthEstimate d;
  d.depth = decode_field(body, "depth", [](const Bytes& b) { return decode_pfm(b); });
  if (d.depth.channels() != 1) throw Error(ErrorCode::ProtocolError, "depth must be single-channel");
  if (body.contains("focal") && !body["focal"].is_null())
    d.focal = field(body, "focal", json::value_t::number_float).get<double>();
  return d;
}

json text_request(const Image& image, const std::string& prompt) {
  return {{"image", base64_encode(encode_png(image))}, {"prompt", prompt}};
}

TextRequest parse_text_request(const json& body) { return {decode_image(body, "image"), text_field(body, "prompt")}; }

json text_response(const std::string& text) { return {{"text", text}}; }

std::string parse_text_response(const json& body) { return text_field(body, "text"); }

}  // namespace splatscape
