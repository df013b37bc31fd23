#include "splatscape/adapters/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <random>

#include "splatscape/adapters/codec.hpp"
#include "splatscape/error.hpp"
#include "splatscape/geometry.hpp"
#include "splatscape/io.hpp"
#include "splatscape/metrics.hpp"

namespace splatscape {

namespace {

constexpr double kFallbackFov = 60.0 * 3.14159265358979323846 / 180.0;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t content_hash(const Image& image, const Mask& mask) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : image.values()) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix(h, bits);
  }
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) h = mix(h, mask(x, y) ? 1 : 0);
  return h;
}

}  // namespace

Image inpaint(const InpaintBackend& backend, const Image& image, const Mask& mask, const std::string& prompt) {
  if (mask.width() != image.width() || mask.height() != image.height())
    throw Error(ErrorCode::ShapeMismatch, "inpaint mask and image sizes differ");
  if (!mask.any()) return image;
  const Image filled = backend.inpaint(image, mask, prompt);
  if (!filled.same_shape(image)) throw Error(ErrorCode::ProtocolError, "inpaint result has the wrong shape");
  Image out = image;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      if (mask(x, y))
        for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = filled.at(x, y, c);
  return out;
}

DepthEstimate estimate_depth(const DepthBackend& backend, const Image& image) {
  return estimate_depth(backend, image, focal_from_fov(kFallbackFov, std::max(image.width(), image.height())));
}

DepthEstimate estimate_depth(const DepthBackend& backend, const Image& image, double fallback_focal) {
  DepthEstimate d = backend.estimate_depth(image);
  if (d.depth.width() != image.width() || d.depth.height() != image.height() || d.depth.channels() != 1)
    throw Error(ErrorCode::ProtocolError, "depth map does not match the image size");
  for (double v : d.depth.values())
    if (!(std::isfinite(v) && v > 0.0)) throw Error(ErrorCode::ProtocolError, "depth map has non-positive entries");
  if (d.focal && !(std::isfinite(*d.focal) && *d.focal > 0.0))
    throw Error(ErrorCode::ProtocolError, "focal estimate must be positive");
  if (!d.focal) d.focal = fallback_focal;
  return d;
}

std::string caption(const TextBackend& backend, const Image& image, std::string_view prompt) {
  return backend.generate(image, std::string(prompt));
}

bool parse_yes_no(std::string_view answer) {
  std::size_t i = 0;
  while (i < answer.size() && std::isspace(static_cast<unsigned char>(answer[i]))) ++i;
  std::string token;
  for (; i < answer.size() && !std::isspace(static_cast<unsigned char>(answer[i])); ++i) {
    const unsigned char c = static_cast<unsigned char>(answer[i]);
    if (!std::ispunct(c)) token.push_back(static_cast<char>(std::tolower(c)));
  }
  if (token == "yes") return true;
  if (token == "no") return false;
  throw Error(ErrorCode::UnparseableAnswer, "answer '" + std::string(answer) + "' is neither yes nor no");
}

bool vqa_yes_no(const TextBackend& backend, const Image& image, std::string_view question) {
  return parse_yes_no(backend.generate(image, vqa_prompt(question)));
}

MockInpaint::MockInpaint(std::uint64_t seed, double noise_sigma) : seed_(seed), sigma_(noise_sigma) {}

Image MockInpaint::inpaint(const Image& image, const Mask& mask, const std::string&) const {
  const int w = image.width(), h = image.height(), ch = image.channels();
  Image out = image;
  Mask known = mask.inverted();
  if (!known.any()) {
    // Nothing to propagate from: mid-gray.
    for (double& v : out.values()) v = 0.5;
    known = Mask(w, h, true);
  }
  // Wavefront fill: each pass resolves every unknown pixel with a known
  // 4-neighbour, using only pixels known before the pass.
  while (known.count() < static_cast<std::size_t>(w) * h) {
    Mask next = known;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (known(x, y)) continue;
        double sum[4] = {0, 0, 0, 0};
        int n = 0;
        for (auto [dx, dy] : {std::pair{-1, 0}, std::pair{1, 0}, std::pair{0, -1}, std::pair{0, 1}}) {
          const int u = x + dx, v = y + dy;
          if (u < 0 || v < 0 || u >= w || v >= h || !known(u, v)) continue;
          for (int c = 0; c < ch; ++c) sum[c] += out.at(u, v, c);
          ++n;
        }
        if (n == 0) continue;
        for (int c = 0; c < ch; ++c) out.at(x, y, c) = sum[c] / n;
        next.set(x, y, true);
      }
    known = next;
  }
  std::mt19937_64 rng(mix(seed_, content_hash(image, mask)));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < ch; ++c) {
        const double noise = sigma_ * std::clamp(normal(rng), -1.5, 1.5);
        out.at(x, y, c) = std::clamp(out.at(x, y, c) + noise, 0.0, 1.0);
      }
    }
  return out;
}

void MockDepth::register_frame(const Image& image, const Image& depth, std::optional<double> focal) {
  if (depth.width() != image.width() || depth.height() != image.height() || depth.channels() != 1)
    throw Error(ErrorCode::ShapeMismatch, "registered depth does not match its image");
  registry_[key(image)] = DepthEstimate{depth, focal};
}

std::string MockDepth::key(const Image& image) { return sha256_hex(encode_png(image)); }

DepthEstimate MockDepth::estimate_depth(const Image& image) const {
  const auto it = registry_.find(key(image));
  if (it != registry_.end()) return it->second;
  DepthEstimate d;
  d.depth = Image(image.width(), image.height(), 1);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      double lum = 0.0;
      for (int c = 0; c < image.channels(); ++c) lum += image.at(x, y, c);
      lum /= image.channels();
      d.depth.at(x, y) = 1.0 + 0.5 * y / image.height() + 0.25 * lum;
    }
  return d;
}

MockCaption::MockCaption(std::string text) : text_(std::move(text)) {}

std::string MockCaption::generate(const Image&, const std::string&) const { return text_; }

MockVqa::MockVqa(std::string metric, double threshold) : metric_(std::move(metric)), threshold_(threshold) {
  if (metric_ != "laplacian_variance" && metric_ != "stddev" && metric_ != "mean")
    throw Error(ErrorCode::ConfigInvalid, "unknown mock vqa metric '" + metric_ + "'");
}

std::string MockVqa::generate(const Image& image, const std::string&) const {
  double value = 0.0;
  if (metric_ == "laplacian_variance") value = laplacian_variance(image);
  else if (metric_ == "stddev") value = stddev(image);
  else value = mean(image);
  return value >= threshold_ ? "Yes." : "No.";
}

}  // namespace splatscape
