#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "splatscape/image.hpp"

namespace splatscape {

/// DDPM coefficient tables indexed by timestep 0..steps. Index 0 holds the
/// clean-signal boundary (A = 1, B = 0); the posterior tables s, d, sigma are
/// meaningful for t >= 1 only.
///   x_t     = A_t x_0 + B_t eps
///   x_{t-1} = s_t x_t + d_t mu + sigma_t z
struct DiffusionSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> A;
  std::vector<double> B;
  std::vector<double> s;
  std::vector<double> d;
  std::vector<double> sigma;
};

/// Linear beta from beta_start (t = 1) to beta_end (t = steps).
DiffusionSchedule make_schedule(int steps = 50, double beta_start = 1e-4, double beta_end = 0.02);

Image forward_noise(const DiffusionSchedule& schedule, const Image& x0, int t, const Image& noise);
/// Clean-image estimate (x_t - B_t eps_hat) / A_t.
Image predict_x0(const DiffusionSchedule& schedule, const Image& x_t, const Image& eps_hat, int t);
/// Deterministic posterior step (sigma term dropped).
Image reverse_step(const DiffusionSchedule& schedule, const Image& x_t, const Image& mu, int t);
Image reverse_step(const DiffusionSchedule& schedule, const Image& x_t, const Image& mu, int t, const Image& noise);

/// Standard-normal image from a seeded generator.
Image gaussian_noise(int width, int height, int channels, std::uint64_t seed);

/// Optional latent codec in front of a denoiser. None ships; the built-in
/// denoisers work directly on model-range pixels.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual Image encode(const Image& pixels) const = 0;
  virtual Image decode(const Image& latents) const = 0;
};

/// Noise predictor. Inputs and outputs are in model range [-1, 1];
/// implementations must be deterministic and safe for concurrent calls.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Image predict_noise(const Image& x_t, int t, int view) const = 0;
  virtual const LatentCodec* codec() const { return nullptr; }
};

/// eps_hat = (x_t - A_t target_n) / B_t, which makes predict_x0 return the
/// target exactly.
class OracleDenoiser : public Denoiser {
 public:
  OracleDenoiser(DiffusionSchedule schedule, std::vector<Image> targets);
  Image predict_noise(const Image& x_t, int t, int view) const override;

  const DiffusionSchedule& schedule() const { return schedule_; }
  const std::vector<Image>& targets() const { return targets_; }

 private:
  DiffusionSchedule schedule_;
  std::vector<Image> targets_;
};

/// Oracle plus magnitude * bias_n in noise space, so the clean-image estimate
/// of view n is target_n - magnitude * (B_t / A_t) * bias_n.
class PerturbedOracle : public Denoiser {
 public:
  PerturbedOracle(DiffusionSchedule schedule, std::vector<Image> targets, std::vector<Image> biases,
                  double magnitude);
  Image predict_noise(const Image& x_t, int t, int view) const override;

 private:
  OracleDenoiser oracle_;
  std::vector<Image> biases_;
  double magnitude_;
};

/// Per-view smooth bias fields: a few random low-frequency sinusoids per
/// channel, normalised to unit RMS.
std::vector<Image> smooth_bias_fields(int views, int width, int height, std::uint64_t seed);

}  // namespace splatscape
