#include "splatscape/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "splatscape/error.hpp"

namespace splatscape {

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.conjugate();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Eigen::Vector3d Pose::center() const { return -(rotation.conjugate() * translation); }

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

void CameraView::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::InvalidRange, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidRange, "image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidRange, "principal point outside the image");
  }
  if (std::abs(pose.rotation.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidRange, "pose rotation is not a unit quaternion");
  }
}

RgbdFrame::RgbdFrame(int width, int height)
    : rgb(width, height, 3), depth(width, height, 1), mask(width, height, false) {}

void RgbdFrame::validate() const {
  if (rgb.channels() != 3 || depth.channels() != 1 || rgb.width() != depth.width() ||
      rgb.height() != depth.height() || mask.width() != rgb.width() ||
      mask.height() != rgb.height()) {
    throw Error(ErrorCode::ShapeMismatch, "rgb, depth and mask must share H x W");
  }
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      if (mask(x, y) && !(depth.at(x, y) > 0.0)) {
        throw Error(ErrorCode::NonPositiveDepth, "valid pixel with non-positive depth");
      }
    }
  }
}

Projection project(const CameraView& view, const Eigen::Vector3d& point_world) {
  const Eigen::Vector3d pc = view.pose.apply(point_world);
  if (!(pc.z() > 0.0)) throw Error(ErrorCode::BehindCamera, "point has non-positive camera depth");
  Projection out;
  out.pixel = {view.fx * pc.x() / pc.z() + view.cx, view.fy * pc.y() / pc.z() + view.cy};
  out.depth = pc.z();
  return out;
}

Eigen::Vector3d unproject(const CameraView& view, const Eigen::Vector2d& pixel, double depth) {
  if (!(depth > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "unproject needs positive depth");
  const Eigen::Vector3d pc{(pixel.x() - view.cx) / view.fx * depth,
                           (pixel.y() - view.cy) / view.fy * depth, depth};
  return view.pose.rotation.conjugate() * (pc - view.pose.translation);
}

ZoomedOut zoom_out(const CameraView& view, const RgbdFrame& frame, double border_fraction) {
  if (!(border_fraction >= 0.0 && border_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidRange, "border_fraction must lie in [0, 1]");
  }
  const int w = frame.width();
  const int h = frame.height();
  const int new_w = static_cast<int>(std::lround(w * (1.0 + 2.0 * border_fraction)));
  const int new_h = static_cast<int>(std::lround(h * (1.0 + 2.0 * border_fraction)));

  ZoomedOut out;
  out.border_x = (new_w - w) / 2;
  out.border_y = (new_h - h) / 2;
  out.view = view;
  out.view.width = new_w;
  out.view.height = new_h;
  out.view.cx = view.cx + out.border_x;
  out.view.cy = view.cy + out.border_y;

  out.frame = RgbdFrame(new_w, new_h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int nx = x + out.border_x;
      const int ny = y + out.border_y;
      for (int c = 0; c < 3; ++c) out.frame.rgb.at(nx, ny, c) = frame.rgb.at(x, y, c);
      out.frame.depth.at(nx, ny) = frame.depth.at(x, y);
      out.frame.mask.set(nx, ny, frame.mask(x, y));
    }
  }
  return out;
}

double horizontal_fov(const CameraView& view) {
  return 2.0 * std::atan(static_cast<double>(view.width) / (2.0 * view.fx));
}

double focal_from_fov(double fov_radians, int extent_pixels) {
  return static_cast<double>(extent_pixels) / (2.0 * std::tan(0.5 * fov_radians));
}

CameraView default_camera(int width, int height, const Pose& pose) {
  CameraView view;
  view.width = width;
  view.height = height;
  view.fx = view.fy = focal_from_fov(std::numbers::pi / 3.0, std::max(width, height));
  view.cx = 0.5 * (width - 1);
  view.cy = 0.5 * (height - 1);
  view.pose = pose;
  return view;
}

}  // namespace splatscape
