#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace splatscape {

/// Dense row-major H x W x C image of doubles (interleaved channels).
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// H x W boolean mask; true marks a pixel carrying valid content.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool fill = false);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool operator()(int x, int y) const noexcept { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool value) noexcept { bits_[index(x, y)] = value ? 1 : 0; }

  std::size_t count() const noexcept;
  bool any() const noexcept { return count() > 0; }
  Mask inverted() const;

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  bool operator==(const Mask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

Mask operator&(const Mask& a, const Mask& b);

// Elementwise helpers used by the diffusion and metric code.
Image scaled(const Image& image, double factor);
Image axpby(double a, const Image& x, double b, const Image& y);
double mean(const Image& image);
double stddev(const Image& image);
double max_abs_diff(const Image& a, const Image& b);
double mean_abs_diff(const Image& a, const Image& b);

/// [0,1] display range <-> [-1,1] model range.
Image to_model_range(const Image& image);
Image from_model_range(const Image& image);

}  // namespace splatscape
