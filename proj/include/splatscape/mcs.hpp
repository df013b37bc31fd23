#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "splatscape/diffusion.hpp"
#include "splatscape/gaussian_field.hpp"
#include "splatscape/geometry.hpp"
#include "splatscape/optimize.hpp"
#include "splatscape/render.hpp"

namespace splatscape {

struct McsConfig {
  int n_views = 8;
  int t_start = 10;
  /// Rectification weight used for every step unless w_schedule is set.
  double w = 0.5;
  /// Optional per-step weights, w_schedule[t - 1] for t = 1..t_start.
  std::vector<double> w_schedule;
  /// Temporal-fit steps at `resolution`; scaled by pixel count for other sizes.
  int fit_steps = 2560;
  int resolution = 512;
  double lr_position = 1e-4;
  bool rectify_in_eps = true;
  /// Adds the posterior sigma_t z term in each reverse step.
  bool stochastic = true;
  /// When set, per-step mu_hat / mu_bar / mu_tilde are written here as PFM
  /// (model range) and PNG (display range).
  std::filesystem::path debug_dir;

  void validate(const DiffusionSchedule& schedule) const;
  double weight(int t) const;
  /// round(fit_steps * width * height / resolution^2).
  int effective_fit_steps(int width, int height) const;
};

/// Per-view buffers of one sampling step, all in model range [-1, 1].
struct McsState {
  int t = 0;
  std::vector<Image> x;         // x_t before the step
  std::vector<Image> mu_hat;    // clean estimates from the denoiser
  std::vector<Image> mu_bar;    // renders of the temporal field
  std::vector<Image> mu_tilde;  // rectified estimates
  GaussianField temporal;
};

/// Per view: gamma = std(mu_hat) / std(mu_bar) and
/// mu_tilde = w * gamma * mu_bar + (1 - w) * mu_hat.
std::vector<Image> rectify(const std::vector<Image>& mu_hat, const std::vector<Image>& mu_bar, double w);
double std_ratio(const Image& mu_hat, const Image& mu_bar);

/// Noise that reproduces mu_tilde through the clean-image estimate:
/// (x_t - A_t mu_tilde) / B_t.
Image rectify_eps(const DiffusionSchedule& schedule, const Image& x_t, const Image& mu_tilde, int t);

/// Reverse step written in noise form:
/// x_{t-1} = (s_t + d_t / A_t) x_t - (d_t B_t / A_t) eps + sigma_t z.
Image reverse_step_eps(const DiffusionSchedule& schedule, const Image& x_t, const Image& eps, int t);
Image reverse_step_eps(const DiffusionSchedule& schedule, const Image& x_t, const Image& eps, int t,
                       const Image& noise);

struct McsResult {
  std::vector<Image> images;  // mu_tilde at t = 1, display range, clamped to [0, 1]
  std::vector<Image> initial;  // renders the chain started from, display range
};

using McsObserver = std::function<void(const McsState&)>;

/// Samples n_views images that start from renders of `field` and are pulled
/// toward a shared Gaussian field at every denoising step.
McsResult mcs_sample(const GaussianField& field, const std::vector<CameraView>& views, const Denoiser& denoiser,
                     const DiffusionSchedule& schedule, const McsConfig& config, std::uint64_t seed,
                     const RenderSettings& settings = {}, const McsObserver& observer = {});

/// Optimizes the field against the refined views plus, when given, the input
/// frame. Every pixel of a refined view counts.
GaussianField refine_field(const GaussianField& field, const std::vector<CameraView>& views,
                           const std::vector<Image>& images, const std::optional<OptimizationTarget>& input,
                           int steps = 2560, std::uint64_t seed = 0, const RenderSettings& settings = {});

struct SdsConfig {
  double t_min_fraction = 0.02;
  double t_max_fraction = 0.98;
  /// Only colours receive updates. With geometry free at the default rates
  /// the bias term turns opacities and scales into texture-dependent speckle.
  bool appearance_only = true;
  OptimizerConfig optimizer;
};

/// Score distillation: each iteration renders one random view, noises it to a
/// random t, and descends B_t^2 (eps_hat - eps) through the renderer.
GaussianField sds_refine(const GaussianField& field, const std::vector<CameraView>& views, const Denoiser& denoiser,
                         const DiffusionSchedule& schedule, int iterations, std::uint64_t seed,
                         const SdsConfig& config = {}, const RenderSettings& settings = {});

/// Perturbed oracle whose clean estimate also drifts toward a blurred target
/// as noise grows: mu_hat = (1 - rho_t) target + rho_t blur(target)
/// - magnitude (B_t / A_t) bias, with rho_t = min(1, blur_gain B_t / A_t).
/// Mimics a posterior mean, which loses detail at high noise levels.
class StructuredBiasOracle : public Denoiser {
 public:
  StructuredBiasOracle(DiffusionSchedule schedule, std::vector<Image> targets, std::vector<Image> biases,
                       double magnitude, double blur_gain = 2.0, int blur_radius = 3);
  Image predict_noise(const Image& x_t, int t, int view) const override;
  Image clean_estimate(int t, int view) const;

 private:
  DiffusionSchedule schedule_;
  std::vector<Image> targets_;
  std::vector<Image> blurred_;
  std::vector<Image> biases_;
  double magnitude_;
  double blur_gain_;
};

/// Separable box blur with edge clamping, radius r (window 2r + 1).
Image box_blur(const Image& image, int radius);

}  // namespace splatscape
