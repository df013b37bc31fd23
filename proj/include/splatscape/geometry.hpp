#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "splatscape/image.hpp"

namespace splatscape {

/// Rigid world -> camera transform: p_cam = rotation * p_world + translation.
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Pose inverse() const;
  /// Camera centre in world coordinates.
  Eigen::Vector3d center() const;
};

/// (a * b)(p) = a(b(p)).
Pose compose(const Pose& a, const Pose& b);

/// Pinhole camera; pixel (x, y) has its centre at integer coordinates (x, y).
struct CameraView {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Pose pose;

  /// Throws InvalidRange when an invariant (positive focal, principal point
  /// inside the image, unit quaternion) does not hold.
  void validate() const;
  double mean_focal() const { return 0.5 * (fx + fy); }
};

/// RGB in [0,1], z-depth in metres, validity mask.
struct RgbdFrame {
  Image rgb;    // H x W x 3
  Image depth;  // H x W x 1
  Mask mask;

  RgbdFrame() = default;
  RgbdFrame(int width, int height);

  int width() const { return rgb.width(); }
  int height() const { return rgb.height(); }
  void validate() const;
};

struct Projection {
  Eigen::Vector2d pixel;
  double depth = 0.0;
};

Projection project(const CameraView& view, const Eigen::Vector3d& point_world);
Eigen::Vector3d unproject(const CameraView& view, const Eigen::Vector2d& pixel, double depth);

struct ZoomedOut {
  CameraView view;
  RgbdFrame frame;
  int border_x = 0;
  int border_y = 0;
};

/// Enlarges the canvas by border_fraction on each side at fixed focal length.
/// New border pixels are masked invalid.
ZoomedOut zoom_out(const CameraView& view, const RgbdFrame& frame, double border_fraction);

double horizontal_fov(const CameraView& view);
/// Focal length (pixels) that gives `fov_radians` across `extent_pixels`.
double focal_from_fov(double fov_radians, int extent_pixels);

/// Camera with centred principal point and a 60 degree field of view on the
/// longer image side, the fallback when no focal estimate is available.
CameraView default_camera(int width, int height, const Pose& pose = {});

}  // namespace splatscape
