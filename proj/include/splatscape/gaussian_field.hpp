#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "splatscape/geometry.hpp"

namespace splatscape {

double sigmoid(double x);
double logit(double p);

/// One 3D Gaussian. Opacity and scales are stored in their unconstrained
/// parameterisations (logit and log); the rotation is a (w, x, y, z)
/// quaternion that the renderer normalises on use.
struct GaussianKernel {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double opacity_logit = 0.0;
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotation{1.0, 0.0, 0.0, 0.0};

  double opacity() const { return sigmoid(opacity_logit); }
  Eigen::Vector3d scale() const { return log_scale.array().exp(); }
};

struct GaussianField {
  std::vector<GaussianKernel> kernels;
  std::vector<int> provenance;  // index of the generation step that created each kernel

  std::size_t size() const { return kernels.size(); }
  bool empty() const { return kernels.empty(); }
  void push_back(const GaussianKernel& kernel, int source) {
    kernels.push_back(kernel);
    provenance.push_back(source);
  }
  /// Keeps the kernels whose flag is set, preserving order.
  GaussianField select(const std::vector<bool>& keep) const;
};

struct LiftOptions {
  double opacity = 0.8;
  int source_index = 0;
};

/// One kernel per valid pixel, isotropic scale d / (sqrt(2) f).
GaussianField lift_pixels(const CameraView& view, const RgbdFrame& frame,
                          const LiftOptions& options = {});

/// Keep-mask that drops valid pixels whose largest relative depth jump to a
/// valid 4-neighbour exceeds ratio_threshold.
Mask filter_boundary(const RgbdFrame& frame, double ratio_threshold = 0.1);

struct DepthObservation {
  CameraView view;
  Image depth;  // H x W x 1, non-positive entries mean "nothing recorded"
};

/// Drops candidates that land in front of a recorded surface in any prior
/// view. The tolerance is relative: a kernel is discarded when its depth is
/// below recorded * (1 - relative_tolerance).
GaussianField filter_occlusion(const GaussianField& candidates,
                               const std::vector<DepthObservation>& prior_views,
                               double relative_tolerance = 0.02);

GaussianField merge(const GaussianField& base, const GaussianField& addition);

/// Kernels created by a given generation step, in their original order.
GaussianField split_by_provenance(const GaussianField& field, int source);

// Binary little-endian PLY in the common 3DGS layout:
// x y z f_dc_0..2 opacity scale_0..2 rot_0..3 (all float32).
void write_ply(const GaussianField& field, const std::filesystem::path& path);
GaussianField read_ply(const std::filesystem::path& path);
std::vector<unsigned char> encode_ply(const GaussianField& field);
GaussianField decode_ply(const std::vector<unsigned char>& bytes);

}  // namespace splatscape
