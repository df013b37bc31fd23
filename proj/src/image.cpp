#include "splatscape/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "splatscape/error.hpp"

namespace splatscape {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels <= 0) {
    throw Error(ErrorCode::ShapeMismatch, "image dimensions must be non-negative");
  }
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(channels),
               fill);
}

Mask::Mask(int width, int height, bool fill) : width_(width), height_(height) {
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Mask Mask::inverted() const {
  Mask out = *this;
  for (auto& b : out.bits_) b = b ? 0 : 1;
  return out;
}

Mask operator&(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::ShapeMismatch, "mask sizes differ");
  }
  Mask out(a.width(), a.height());
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) out.set(x, y, a(x, y) && b(x, y));
  return out;
}

Image scaled(const Image& image, double factor) {
  Image out = image;
  for (double& v : out.values()) v *= factor;
  return out;
}

Image axpby(double a, const Image& x, double b, const Image& y) {
  if (!x.same_shape(y)) throw Error(ErrorCode::ShapeMismatch, "axpby operands differ in shape");
  Image out(x.width(), x.height(), x.channels());
  auto xs = x.values();
  auto ys = y.values();
  auto os = out.values();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = a * xs[i] + b * ys[i];
  return out;
}

double mean(const Image& image) {
  auto v = image.values();
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const Image& image) {
  auto v = image.values();
  if (v.empty()) return 0.0;
  const double m = mean(image);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "max_abs_diff operands differ");
  double worst = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) worst = std::max(worst, std::abs(av[i] - bv[i]));
  return worst;
}

double mean_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "mean_abs_diff operands differ");
  auto av = a.values();
  auto bv = b.values();
  if (av.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += std::abs(av[i] - bv[i]);
  return acc / static_cast<double>(av.size());
}

Image to_model_range(const Image& image) {
  Image out = image;
  for (double& v : out.values()) v = 2.0 * v - 1.0;
  return out;
}

Image from_model_range(const Image& image) {
  Image out = image;
  for (double& v : out.values()) v = 0.5 * (v + 1.0);
  return out;
}

}  // namespace splatscape
