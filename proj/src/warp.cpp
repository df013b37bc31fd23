#include "splatscape/warp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "splatscape/error.hpp"

namespace splatscape {

RgbdFrame render_partial(const GaussianField& field, const CameraView& view, double alpha_threshold,
                         const RenderSettings& settings) {
  if (!(alpha_threshold > 0.0 && alpha_threshold < 1.0))
    throw Error(ErrorCode::InvalidRange, "alpha threshold must lie in (0,1)");
  RenderOutput out = render(field, view, settings);
  RgbdFrame frame;
  frame.rgb = std::move(out.rgb);
  frame.depth = std::move(out.depth);
  frame.mask = Mask(view.width, view.height);
  for (int y = 0; y < view.height; ++y)
    for (int x = 0; x < view.width; ++x) frame.mask.set(x, y, out.alpha.at(x, y) >= alpha_threshold);
  return frame;
}

RgbdFrame forward_warp(const CameraView& src_view, const RgbdFrame& src_frame, const CameraView& dst_view) {
  RgbdFrame out(dst_view.width, dst_view.height);
  Image zbuf(dst_view.width, dst_view.height, 1, std::numeric_limits<double>::infinity());
  const Eigen::Matrix3d r = dst_view.pose.rotation.toRotationMatrix();
  // Sequential scan in source index order; the strict comparison keeps the
  // first (lowest-index) writer on depth ties.
  for (int y = 0; y < src_frame.height(); ++y) {
    for (int x = 0; x < src_frame.width(); ++x) {
      if (!src_frame.mask(x, y)) continue;
      const Eigen::Vector3d world = unproject(src_view, {x, y}, src_frame.depth.at(x, y));
      const Eigen::Vector3d cam = r * world + dst_view.pose.translation;
      if (!(cam.z() > 0.0)) continue;
      const long u = std::lround(dst_view.fx * cam.x() / cam.z() + dst_view.cx);
      const long v = std::lround(dst_view.fy * cam.y() / cam.z() + dst_view.cy);
      if (u < 0 || v < 0 || u >= dst_view.width || v >= dst_view.height) continue;
      const int ui = static_cast<int>(u), vi = static_cast<int>(v);
      if (!(cam.z() < zbuf.at(ui, vi))) continue;
      zbuf.at(ui, vi) = cam.z();
      out.depth.at(ui, vi) = cam.z();
      for (int c = 0; c < 3; ++c) out.rgb.at(ui, vi, c) = src_frame.rgb.at(x, y, c);
      out.mask.set(ui, vi, true);
    }
  }
  return out;
}

DepthAlignment align_depth(const Image& estimated, const RgbdFrame& rendered, int smoothing_band) {
  const int w = rendered.width(), h = rendered.height();
  if (estimated.width() != w || estimated.height() != h || estimated.channels() != 1)
    throw Error(ErrorCode::ShapeMismatch, "estimated depth must match the rendered frame");
  if (smoothing_band < 0) throw Error(ErrorCode::InvalidRange, "smoothing band must be non-negative");

  // Centred normal equations: invariant (up to rounding) to affine changes of
  // the estimate, and well conditioned for depths far from zero.
  double n = 0.0, mean_e = 0.0, mean_r = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (rendered.mask(x, y)) {
        n += 1.0;
        mean_e += estimated.at(x, y);
        mean_r += rendered.depth.at(x, y);
      }
  if (n < 2.0) throw Error(ErrorCode::DegenerateDepth, "need at least two valid pixels");
  mean_e /= n;
  mean_r /= n;
  double var_e = 0.0, cov = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (rendered.mask(x, y)) {
        const double de = estimated.at(x, y) - mean_e;
        var_e += de * de;
        cov += de * (rendered.depth.at(x, y) - mean_r);
      }
  if (var_e / n < 1e-12) throw Error(ErrorCode::DegenerateDepth, "estimated depth is constant over the mask");

  DepthAlignment out;
  out.scale = cov / var_e;
  out.shift = mean_r - out.scale * mean_e;
  out.depth = Image(w, h, 1);

  // Multi-source BFS (8-connected) from every valid pixel: hole pixels inherit
  // the residual of the valid pixel that reaches them first.
  std::vector<int> dist(static_cast<std::size_t>(w) * h, -1);
  std::vector<double> residual(dist.size(), 0.0);
  std::deque<int> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double aligned = out.scale * estimated.at(x, y) + out.shift;
      if (rendered.mask(x, y)) {
        const int i = y * w + x;
        dist[static_cast<std::size_t>(i)] = 0;
        residual[static_cast<std::size_t>(i)] = rendered.depth.at(x, y) - aligned;
        out.depth.at(x, y) = rendered.depth.at(x, y);
        queue.push_back(i);
      } else {
        out.depth.at(x, y) = aligned;
      }
    }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    const int d = dist[static_cast<std::size_t>(i)];
    if (d >= smoothing_band) continue;
    const int x = i % w, y = i / w;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int j = ny * w + nx;
        if (dist[static_cast<std::size_t>(j)] >= 0) continue;
        dist[static_cast<std::size_t>(j)] = d + 1;
        residual[static_cast<std::size_t>(j)] = residual[static_cast<std::size_t>(i)];
        queue.push_back(j);
      }
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int d = dist[static_cast<std::size_t>(y * w + x)];
      if (d <= 0) continue;
      // Ring 1 takes the full residual, ring band + 1 (never reached) none.
      const double weight = 1.0 - static_cast<double>(d - 1) / smoothing_band;
      out.depth.at(x, y) += weight * residual[static_cast<std::size_t>(y * w + x)];
    }
  return out;
}

}  // namespace splatscape
