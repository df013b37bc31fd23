#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "splatscape/geometry.hpp"
#include "splatscape/image.hpp"

namespace splatscape {

using ViewPair = std::pair<std::size_t, std::size_t>;

/// Every ordered pair (i, j) with i != j.
std::vector<ViewPair> all_view_pairs(std::size_t n);

/// Mean over pairs of the MAE between frame j and frame i forward-warped into
/// view j with frame i's depth, over pixels hit by the warp and valid in j.
/// Pairs without overlap are skipped; EmptyOverlap if every pair is.
double consistency_metric(const std::vector<CameraView>& views, const std::vector<RgbdFrame>& frames,
                          const std::vector<ViewPair>& pairs);

/// 10 log10(1 / MSE) over masked pixels; identical inputs report kPsnrCap.
inline constexpr double kPsnrCap = 99.0;
double psnr(const Image& a, const Image& b, const Mask& mask);

/// Variance of the 4-neighbour Laplacian of the channel-mean image over
/// interior pixels.
double laplacian_variance(const Image& image);

}  // namespace splatscape
