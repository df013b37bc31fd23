#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "splatscape/adapters/protocol.hpp"
#include "splatscape/image.hpp"

namespace splatscape {

// Backends implement one model role each. Implementations must be safe for
// concurrent calls. Callers go through the contract functions below, which
// enforce the guarantees the rest of the pipeline relies on.

class InpaintBackend {
 public:
  virtual ~InpaintBackend() = default;
  virtual Image inpaint(const Image& image, const Mask& mask, const std::string& prompt) const = 0;
};

class DepthBackend {
 public:
  virtual ~DepthBackend() = default;
  virtual DepthEstimate estimate_depth(const Image& image) const = 0;
};

/// Captioning and VQA: image plus prompt in, free text out.
class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual std::string generate(const Image& image, const std::string& prompt) const = 0;
};

/// Backend content inside the mask, the input bit-for-bit outside it. An
/// empty mask never reaches the backend.
Image inpaint(const InpaintBackend& backend, const Image& image, const Mask& mask, const std::string& prompt);

/// Depth must match the image size and be finite and positive
/// (ProtocolError otherwise). A missing focal falls back to a 60 degree field
/// of view across the longer image side.
DepthEstimate estimate_depth(const DepthBackend& backend, const Image& image);
/// Same checks; a missing focal becomes `fallback_focal`, for canvases whose
/// camera is already known (a zoomed-out input keeps the input focal).
DepthEstimate estimate_depth(const DepthBackend& backend, const Image& image, double fallback_focal);

std::string caption(const TextBackend& backend, const Image& image, std::string_view prompt = kCaptionPrompt);

/// First token, lowercased with punctuation stripped, must be "yes" or "no";
/// UnparseableAnswer otherwise.
bool parse_yes_no(std::string_view answer);
bool vqa_yes_no(const TextBackend& backend, const Image& image, std::string_view question);

// Deterministic offline backends.

/// Fills masked pixels by repeatedly averaging already-known 4-neighbours
/// (nearest-valid diffusion), then adds seeded Gaussian noise with the given
/// sigma, clipped to +-1.5 sigma, and clamps to [0, 1].
class MockInpaint : public InpaintBackend {
 public:
  explicit MockInpaint(std::uint64_t seed = 0, double noise_sigma = 0.02);
  Image inpaint(const Image& image, const Mask& mask, const std::string& prompt) const override;

 private:
  std::uint64_t seed_;
  double sigma_;
};

/// Returns registered ground truth for images whose 8-bit PNG encoding
/// matches a registered frame; otherwise a smooth positive fallback
/// 1 + 0.5 y / H + 0.25 luminance without a focal estimate.
class MockDepth : public DepthBackend {
 public:
  /// Not thread-safe; register everything before concurrent use.
  void register_frame(const Image& image, const Image& depth, std::optional<double> focal = std::nullopt);
  DepthEstimate estimate_depth(const Image& image) const override;
  static std::string key(const Image& image);

 private:
  std::map<std::string, DepthEstimate> registry_;
};

class MockCaption : public TextBackend {
 public:
  explicit MockCaption(std::string text = "a quiet study with a striped wall, a wooden floor and two glossy spheres");
  std::string generate(const Image& image, const std::string& prompt) const override;

 private:
  std::string text_;
};

/// Simulated judge: answers "Yes." when the named image statistic reaches the
/// threshold, "No." otherwise. Statistics: laplacian_variance, stddev, mean.
class MockVqa : public TextBackend {
 public:
  explicit MockVqa(std::string metric = "laplacian_variance", double threshold = 1e-3);
  std::string generate(const Image& image, const std::string& prompt) const override;

 private:
  std::string metric_;
  double threshold_;
};

}  // namespace splatscape
