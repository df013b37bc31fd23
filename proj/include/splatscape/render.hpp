#pragma once

#include <vector>

#include <Eigen/Core>

#include "splatscape/gaussian_field.hpp"
#include "splatscape/geometry.hpp"
#include "splatscape/image.hpp"

namespace splatscape {

struct RenderSettings {
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  int tile_size = 16;
  double near_plane = 0.01;
  /// Variance (px^2) added to every projected covariance. Gives sub-pixel
  /// kernels a minimum footprint so they keep receiving gradients.
  double dilation = 0.3;
  /// Footprint support in standard deviations. The profile reaches zero with
  /// zero slope at this radius.
  double cutoff_sigma = 3.0;
  /// Depth is divided by max(alpha, floor): an alpha-weighted mean where
  /// coverage is real, fading continuously to 0 where it is not.
  double depth_alpha_floor = 1e-4;
};

struct RenderOutput {
  Image rgb;    // H x W x 3, composited over the background
  Image depth;  // H x W x 1, alpha-normalised z-depth (0 where alpha is 0)
  Image alpha;  // H x W x 1
};

/// Upstream gradients of a scalar loss with respect to the render outputs.
/// Empty images are treated as zero.
struct RenderUpstream {
  Image rgb;
  Image depth;
  Image alpha;
};

struct FieldGradients {
  std::vector<Eigen::Vector3d> position;
  std::vector<Eigen::Vector3d> color;
  std::vector<double> opacity_logit;
  std::vector<Eigen::Vector3d> log_scale;
  std::vector<Eigen::Vector4d> rotation;

  explicit FieldGradients(std::size_t n = 0);
  std::size_t size() const { return position.size(); }
  bool all_zero() const;
};

RenderOutput render(const GaussianField& field, const CameraView& view,
                    const RenderSettings& settings = {});

/// Exact gradients of the forward composite (same sort order and footprints).
FieldGradients render_backward(const GaussianField& field, const CameraView& view,
                               const RenderUpstream& upstream,
                               const RenderSettings& settings = {});

/// Rotation matrix of a (w, x, y, z) quaternion after normalisation.
Eigen::Matrix3d rotation_matrix(const Eigen::Vector4d& quaternion);

}  // namespace splatscape
