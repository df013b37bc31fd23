#pragma once

#include <cstdint>
#include <vector>

#include "splatscape/gaussian_field.hpp"
#include "splatscape/geometry.hpp"
#include "splatscape/render.hpp"

namespace splatscape {

struct LossResult {
  double value = 0.0;
  Image gradient;  // dLoss / d(rendered rgb)
};

/// Per-pixel SSIM map (per channel) with an 11x11 uniform window and zero
/// padding, matching the common 3DGS training loss.
Image ssim_map(const Image& a, const Image& b);

/// (1 - lambda) * L1 + lambda * (1 - SSIM), summed over mask-valid pixels and
/// channels. Sum (not mean) reduction keeps per-kernel gradients independent of
/// image size, which is what makes plain per-group learning rates usable.
LossResult photometric_loss(const Image& rendered, const Image& target, const Mask& mask,
                            double lambda_dssim);

struct OptimizerConfig {
  double lr_position = 3e-4;
  double lr_color = 5e-4;
  double lr_scale = 5e-3;
  double lr_opacity = 5e-2;
  double lr_rotation = 1e-3;
  int steps = 100;
  double lambda_dssim = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimizationTarget {
  CameraView view;
  RgbdFrame frame;
};

/// Plain SGD: each step renders one target view (a seeded shuffle cycles
/// through all of them) and applies the per-group learning rates. Colours are
/// projected back to [0,1] and rotations renormalised after every step.
GaussianField optimize(const GaussianField& field, const std::vector<OptimizationTarget>& targets,
                       const OptimizerConfig& config, const RenderSettings& settings = {});

/// Applies one SGD update with the configured per-group learning rates.
void apply_sgd_step(GaussianField& field, const FieldGradients& grads, const OptimizerConfig& config);

}  // namespace splatscape
