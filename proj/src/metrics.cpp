#include "splatscape/metrics.hpp"

#include <cmath>

#include "splatscape/error.hpp"
#include "splatscape/warp.hpp"

namespace splatscape {

std::vector<ViewPair> all_view_pairs(std::size_t n) {
  std::vector<ViewPair> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) pairs.emplace_back(i, j);
  return pairs;
}

double consistency_metric(const std::vector<CameraView>& views, const std::vector<RgbdFrame>& frames,
                          const std::vector<ViewPair>& pairs) {
  if (views.size() != frames.size()) throw Error(ErrorCode::ShapeMismatch, "one frame per view is required");
  if (pairs.empty()) throw Error(ErrorCode::EmptyOverlap, "no view pairs given");
  double total = 0.0;
  int counted = 0;
  for (const auto& [i, j] : pairs) {
    if (i >= views.size() || j >= views.size()) throw Error(ErrorCode::InvalidRange, "view pair index out of range");
    const RgbdFrame warped = forward_warp(views[i], frames[i], views[j]);
    const RgbdFrame& dst = frames[j];
    double err = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < dst.height(); ++y)
      for (int x = 0; x < dst.width(); ++x) {
        if (!warped.mask(x, y) || !dst.mask(x, y)) continue;
        for (int c = 0; c < 3; ++c) err += std::abs(warped.rgb.at(x, y, c) - dst.rgb.at(x, y, c));
        n += 3;
      }
    if (n == 0) continue;
    total += err / static_cast<double>(n);
    ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::EmptyOverlap, "no view pair overlaps");
  return total / counted;
}

double psnr(const Image& a, const Image& b, const Mask& mask) {
  if (!a.same_shape(b) || mask.width() != a.width() || mask.height() != a.height())
    throw Error(ErrorCode::ShapeMismatch, "psnr operands differ in shape");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        sum += d * d;
      }
      n += static_cast<std::size_t>(a.channels());
    }
  if (n == 0) throw Error(ErrorCode::EmptyMask, "psnr mask is empty");
  const double mse = sum / static_cast<double>(n);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double laplacian_variance(const Image& image) {
  const int w = image.width(), h = image.height();
  if (w < 3 || h < 3) throw Error(ErrorCode::InvalidRange, "laplacian needs at least 3x3 pixels");
  auto lum = [&](int x, int y) {
    double s = 0.0;
    for (int c = 0; c < image.channels(); ++c) s += image.at(x, y, c);
    return s / image.channels();
  };
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      const double l = lum(x - 1, y) + lum(x + 1, y) + lum(x, y - 1) + lum(x, y + 1) - 4.0 * lum(x, y);
      sum += l;
      sum2 += l * l;
      ++n;
    }
  const double m = sum / static_cast<double>(n);
  return sum2 / static_cast<double>(n) - m * m;
}

}  // namespace splatscape
