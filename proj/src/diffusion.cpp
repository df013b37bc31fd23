#include "splatscape/diffusion.hpp"

#include <cmath>
#include <random>

#include "splatscape/error.hpp"

namespace splatscape {

DiffusionSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw Error(ErrorCode::InvalidRange, "schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw Error(ErrorCode::InvalidRange, "need 0 < beta_start <= beta_end < 1");

  const auto n = static_cast<std::size_t>(steps) + 1;
  DiffusionSchedule s;
  s.steps = steps;
  s.beta.assign(n, 0.0);
  s.A.assign(n, 0.0);
  s.B.assign(n, 0.0);
  s.s.assign(n, 0.0);
  s.d.assign(n, 0.0);
  s.sigma.assign(n, 0.0);

  // abar_t = prod(1 - beta) and its complement are carried separately; the
  // complement recursion 1 - abar_t = (1 - abar_{t-1}) + abar_{t-1} beta_t
  // avoids cancellation and makes the t = 1 posterior exact (s = 0, d = 1).
  std::vector<double> abar(n, 1.0), comp(n, 0.0);
  s.A[0] = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const auto i = static_cast<std::size_t>(t);
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    s.beta[i] = beta;
    abar[i] = abar[i - 1] * (1.0 - beta);
    comp[i] = comp[i - 1] + abar[i - 1] * beta;
    s.A[i] = std::sqrt(abar[i]);
    s.B[i] = std::sqrt(comp[i]);
    s.s[i] = std::sqrt(1.0 - beta) * comp[i - 1] / comp[i];
    s.d[i] = std::sqrt(abar[i - 1]) * beta / comp[i];
    s.sigma[i] = std::sqrt(beta * comp[i - 1] / comp[i]);
  }
  return s;
}

namespace {

void check_t(const DiffusionSchedule& s, int t, int lowest) {
  if (t < lowest || t > s.steps)
    throw Error(ErrorCode::TimestepOutOfRange,
                "timestep " + std::to_string(t) + " outside [" + std::to_string(lowest) + ", " +
                    std::to_string(s.steps) + "]");
}

}  // namespace

Image forward_noise(const DiffusionSchedule& schedule, const Image& x0, int t, const Image& noise) {
  check_t(schedule, t, 0);
  const auto i = static_cast<std::size_t>(t);
  return axpby(schedule.A[i], x0, schedule.B[i], noise);
}

Image predict_x0(const DiffusionSchedule& schedule, const Image& x_t, const Image& eps_hat, int t) {
  check_t(schedule, t, 1);
  const auto i = static_cast<std::size_t>(t);
  return axpby(1.0 / schedule.A[i], x_t, -schedule.B[i] / schedule.A[i], eps_hat);
}

Image reverse_step(const DiffusionSchedule& schedule, const Image& x_t, const Image& mu, int t) {
  check_t(schedule, t, 1);
  const auto i = static_cast<std::size_t>(t);
  return axpby(schedule.s[i], x_t, schedule.d[i], mu);
}

Image reverse_step(const DiffusionSchedule& schedule, const Image& x_t, const Image& mu, int t, const Image& noise) {
  Image out = reverse_step(schedule, x_t, mu, t);
  if (!noise.same_shape(out)) throw Error(ErrorCode::ShapeMismatch, "noise shape differs from x_t");
  const double sigma = schedule.sigma[static_cast<std::size_t>(t)];
  for (std::size_t k = 0; k < out.size(); ++k) out.values()[k] += sigma * noise.values()[k];
  return out;
}

Image gaussian_noise(int width, int height, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Image out(width, height, channels);
  for (double& v : out.values()) v = n01(rng);
  return out;
}

OracleDenoiser::OracleDenoiser(DiffusionSchedule schedule, std::vector<Image> targets)
    : schedule_(std::move(schedule)), targets_(std::move(targets)) {}

Image OracleDenoiser::predict_noise(const Image& x_t, int t, int view) const {
  check_t(schedule_, t, 1);
  if (view < 0 || static_cast<std::size_t>(view) >= targets_.size())
    throw Error(ErrorCode::InvalidRange, "view index outside the oracle's targets");
  const auto i = static_cast<std::size_t>(t);
  return axpby(1.0 / schedule_.B[i], x_t, -schedule_.A[i] / schedule_.B[i], targets_[static_cast<std::size_t>(view)]);
}

PerturbedOracle::PerturbedOracle(DiffusionSchedule schedule, std::vector<Image> targets, std::vector<Image> biases,
                                 double magnitude)
    : oracle_(std::move(schedule), std::move(targets)), biases_(std::move(biases)), magnitude_(magnitude) {
  if (biases_.size() != oracle_.targets().size())
    throw Error(ErrorCode::ShapeMismatch, "one bias field per target view is required");
}

Image PerturbedOracle::predict_noise(const Image& x_t, int t, int view) const {
  Image eps = oracle_.predict_noise(x_t, t, view);
  if (magnitude_ == 0.0) return eps;
  return axpby(1.0, eps, magnitude_, biases_[static_cast<std::size_t>(view)]);
}

std::vector<Image> smooth_bias_fields(int views, int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(-2.0, 2.0), phase(0.0, 2.0 * M_PI), amp(0.5, 1.0);
  std::vector<Image> out;
  for (int n = 0; n < views; ++n) {
    Image field(width, height, 3);
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 3; ++k) {
        const double fx = freq(rng), fy = freq(rng), ph = phase(rng), a = amp(rng);
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x)
            field.at(x, y, c) += a * std::sin(2.0 * M_PI * (fx * x / width + fy * y / height) + ph);
      }
    }
    double rms = 0.0;
    for (double v : field.values()) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(field.size()));
    out.push_back(rms > 0.0 ? scaled(field, 1.0 / rms) : field);
  }
  return out;
}

}  // namespace splatscape
