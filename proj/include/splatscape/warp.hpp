#pragma once

#include "splatscape/gaussian_field.hpp"
#include "splatscape/geometry.hpp"
#include "splatscape/render.hpp"

namespace splatscape {

/// Renders `view` and marks pixels with accumulated alpha >= threshold as
/// valid; everything else is a hole to inpaint.
RgbdFrame render_partial(const GaussianField& field, const CameraView& view, double alpha_threshold = 0.5,
                         const RenderSettings& settings = {});

/// Splats every valid source pixel into `dst` (nearest pixel, z-buffered).
/// On equal depth the lowest source pixel index wins.
RgbdFrame forward_warp(const CameraView& src_view, const RgbdFrame& src_frame, const CameraView& dst_view);

struct DepthAlignment {
  Image depth;
  double scale = 1.0;
  double shift = 0.0;
};

/// Least-squares scale/shift of `estimated` onto the valid rendered depth.
/// Valid pixels take the rendered depth; hole pixels take the aligned
/// estimate plus the residual of their nearest valid pixel, faded linearly
/// to zero over `smoothing_band` pixels.
DepthAlignment align_depth(const Image& estimated, const RgbdFrame& rendered, int smoothing_band = 16);

}  // namespace splatscape
