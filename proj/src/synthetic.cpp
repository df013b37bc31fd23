#include "splatscape/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splatscape {

namespace {

struct Sphere {
  Eigen::Vector3d center;
  double radius;
  Eigen::Vector3d albedo;
};

const Sphere kSpheres[] = {
    {{-0.35, 0.15, 2.0}, 0.35, {0.85, 0.30, 0.25}},
    {{0.45, 0.25, 2.4}, 0.25, {0.20, 0.40, 0.85}},
};
constexpr double kWallZ = 3.0;
constexpr double kFloorY = 0.5;

Eigen::Vector3d wall_color(const Eigen::Vector3d& p) {
  const double stripes = 0.5 + 0.5 * std::sin(6.0 * p.x() + 2.0 * p.y());
  const double band = 0.5 + 0.5 * std::cos(4.0 * p.y());
  return {0.55 + 0.30 * stripes, 0.50 + 0.25 * band, 0.35 + 0.20 * stripes * band};
}

Eigen::Vector3d floor_color(const Eigen::Vector3d& p) {
  const double u = std::sin(5.0 * p.x()) * std::sin(5.0 * p.z());
  return {0.45 + 0.25 * u, 0.35 + 0.15 * u, 0.25 + 0.10 * u};
}

bool hit_sphere(const Sphere& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d, double& t) {
  const Eigen::Vector3d oc = o - s.center;
  const double a = d.squaredNorm();
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return false;
  t = (-b - std::sqrt(disc)) / a;
  return t > 0.0;
}

}  // namespace

CameraView synthetic_view(int width, int height) { return default_camera(width, height); }

RgbdFrame render_synthetic(const CameraView& view) {
  RgbdFrame frame(view.width, view.height);
  const Eigen::Matrix3d rt = view.pose.rotation.toRotationMatrix().transpose();
  const Eigen::Vector3d origin = view.pose.center();
  const Eigen::Vector3d light = Eigen::Vector3d(-0.4, -1.0, -0.6).normalized();
  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      // Camera-space ray with unit z, so the ray parameter is the z-depth.
      const Eigen::Vector3d dir_cam((x - view.cx) / view.fx, (y - view.cy) / view.fy, 1.0);
      const Eigen::Vector3d dir = rt * dir_cam;
      double best = std::numeric_limits<double>::infinity();
      Eigen::Vector3d color = Eigen::Vector3d::Zero();
      if (dir.z() > 0.0) {
        const double t = (kWallZ - origin.z()) / dir.z();
        if (t > 0.0 && t < best) {
          best = t;
          color = wall_color(origin + t * dir);
        }
      }
      if (dir.y() > 0.0) {
        const double t = (kFloorY - origin.y()) / dir.y();
        if (t > 0.0 && t < best) {
          best = t;
          color = floor_color(origin + t * dir);
        }
      }
      for (const Sphere& s : kSpheres) {
        double t;
        if (hit_sphere(s, origin, dir, t) && t < best) {
          best = t;
          const Eigen::Vector3d n = (origin + t * dir - s.center).normalized();
          color = s.albedo * (0.35 + 0.65 * std::max(0.0, n.dot(light)));
        }
      }
      if (!std::isfinite(best)) continue;
      frame.depth.at(x, y) = best;
      for (int c = 0; c < 3; ++c) frame.rgb.at(x, y, c) = std::clamp(color[c], 0.0, 1.0);
      frame.mask.set(x, y, true);
    }
  }
  return frame;
}

}  // namespace splatscape
