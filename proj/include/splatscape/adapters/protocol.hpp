#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "splatscape/image.hpp"

namespace splatscape {

enum class Role { Inpaint, Depth, Caption, Vqa };

std::string_view to_string(Role role);
/// ConfigInvalid for unknown names.
Role role_from_string(std::string_view name);

class ModelEndpoint {
 public:
  /// url is an http:// base; requests go to <url>/<role>.
  ModelEndpoint(Role role, std::string url, double timeout_seconds = 60.0, int retries = 3);

  Role role() const { return role_; }
  const std::string& url() const { return url_; }
  double timeout_seconds() const { return timeout_; }
  int retries() const { return retries_; }

 private:
  Role role_;
  std::string url_;
  double timeout_;
  int retries_;
};

inline constexpr std::string_view kCaptionPrompt =
    "<image> USER: Detaily imagine and describe the scene this image is taken from? ASSISTANT: This image is "
    "taken from a scene of";

/// "<image> USER: <question>, just answer with yes or no? ASSISTANT:"
std::string vqa_prompt(std::string_view question);

struct DepthEstimate {
  Image depth;                 // H x W x 1
  std::optional<double> focal;  // pixels
};

// Wire bodies. Images travel as base64 PNG (8-bit RGB), masks as base64
// single-channel PNG, depth as base64 little-endian PFM. Parsers throw
// ProtocolError on missing, mistyped, or undecodable fields.
nlohmann::json inpaint_request(const Image& image, const Mask& mask, const std::string& prompt);
struct InpaintRequest {
  Image image;
  Mask mask;
  std::string prompt;
};
InpaintRequest parse_inpaint_request(const nlohmann::json& body);
nlohmann::json inpaint_response(const Image& image);
Image parse_inpaint_response(const nlohmann::json& body);

nlohmann::json depth_request(const Image& image);
Image parse_depth_request(const nlohmann::json& body);
nlohmann::json depth_response(const DepthEstimate& estimate);
DepthEstimate parse_depth_response(const nlohmann::json& body);

/// Caption and VQA share one shape: {image, prompt} -> {text}.
nlohmann::json text_request(const Image& image, const std::string& prompt);
struct TextRequest {
  Image image;
  std::string prompt;
};
TextRequest parse_text_request(const nlohmann::json& body);
nlohmann::json text_response(const std::string& text);
std::string parse_text_response(const nlohmann::json& body);

}  // namespace splatscape
