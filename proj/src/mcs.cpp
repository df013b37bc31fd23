#include "splatscape/mcs.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "splatscape/error.hpp"
#include "splatscape/io.hpp"

namespace splatscape {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (purpose, step, view) so results do not depend on
// the order views are processed in.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t t, std::uint64_t view) {
  return splitmix(splitmix(splitmix(splitmix(seed) ^ purpose) ^ t) ^ view);
}

enum : std::uint64_t { kInitialNoise = 1, kStepNoise = 2, kFitShuffle = 3 };

Image clamped01(const Image& image) {
  Image out = image;
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

void check_t(const DiffusionSchedule& schedule, int t) {
  if (t < 1 || t > schedule.steps)
    throw Error(ErrorCode::TimestepOutOfRange, "t = " + std::to_string(t) + " outside [1, " +
                                                   std::to_string(schedule.steps) + "]");
}

void dump(const std::filesystem::path& dir, const McsState& state) {
  auto name = [&](const char* what, std::size_t n) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "t%02d_view%02zu_%s", state.t, n, what);
    return dir / buf;
  };
  for (std::size_t n = 0; n < state.mu_hat.size(); ++n) {
    const std::pair<const char*, const Image*> buffers[] = {
        {"mu_hat", &state.mu_hat[n]}, {"mu_bar", &state.mu_bar[n]}, {"mu_tilde", &state.mu_tilde[n]}};
    for (const auto& [what, image] : buffers) {
      write_pfm(*image, name(what, n).replace_extension(".pfm"));
      write_png(from_model_range(*image), name(what, n).replace_extension(".png"));
    }
  }
}

}  // namespace

void McsConfig::validate(const DiffusionSchedule& schedule) const {
  if (n_views < 1) throw Error(ErrorCode::InvalidRange, "n_views must be at least 1");
  if (t_start < 1 || t_start > schedule.steps)
    throw Error(ErrorCode::InvalidRange, "t_start must lie in [1, " + std::to_string(schedule.steps) + "]");
  if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorCode::InvalidRange, "w must lie in [0, 1]");
  if (!w_schedule.empty()) {
    if (static_cast<int>(w_schedule.size()) < t_start)
      throw Error(ErrorCode::InvalidRange, "w_schedule needs one weight per step up to t_start");
    for (double v : w_schedule)
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidRange, "w_schedule weights must lie in [0, 1]");
  }
  if (fit_steps < 0) throw Error(ErrorCode::InvalidRange, "fit_steps must be non-negative");
  if (resolution < 1) throw Error(ErrorCode::InvalidRange, "resolution must be positive");
  if (!(lr_position > 0.0)) throw Error(ErrorCode::InvalidRange, "lr_position must be positive");
}

double McsConfig::weight(int t) const { return w_schedule.empty() ? w : w_schedule.at(static_cast<std::size_t>(t - 1)); }

int McsConfig::effective_fit_steps(int width, int height) const {
  const double ratio = static_cast<double>(width) * height / (static_cast<double>(resolution) * resolution);
  return static_cast<int>(std::lround(fit_steps * ratio));
}

double std_ratio(const Image& mu_hat, const Image& mu_bar) {
  const double sb = stddev(mu_bar);
  if (!(sb > 1e-12)) throw Error(ErrorCode::DegenerateRender, "temporal render has zero standard deviation");
  return stddev(mu_hat) / sb;
}

std::vector<Image> rectify(const std::vector<Image>& mu_hat, const std::vector<Image>& mu_bar, double w) {
  if (mu_hat.size() != mu_bar.size()) throw Error(ErrorCode::ShapeMismatch, "view counts differ");
  std::vector<Image> out;
  out.reserve(mu_hat.size());
  for (std::size_t n = 0; n < mu_hat.size(); ++n) {
    if (!mu_hat[n].same_shape(mu_bar[n])) throw Error(ErrorCode::ShapeMismatch, "view shapes differ");
    const double gamma = std_ratio(mu_hat[n], mu_bar[n]);
    out.push_back(axpby(w * gamma, mu_bar[n], 1.0 - w, mu_hat[n]));
  }
  return out;
}

Image rectify_eps(const DiffusionSchedule& schedule, const Image& x_t, const Image& mu_tilde, int t) {
  check_t(schedule, t);
  return axpby(1.0 / schedule.B[t], x_t, -schedule.A[t] / schedule.B[t], mu_tilde);
}

Image reverse_step_eps(const DiffusionSchedule& schedule, const Image& x_t, const Image& eps, int t) {
  check_t(schedule, t);
  const double a = schedule.A[t], b = schedule.B[t];
  return axpby(schedule.s[t] + schedule.d[t] / a, x_t, -schedule.d[t] * b / a, eps);
}

Image reverse_step_eps(const DiffusionSchedule& schedule, const Image& x_t, const Image& eps, int t,
                       const Image& noise) {
  return axpby(1.0, reverse_step_eps(schedule, x_t, eps, t), schedule.sigma[t], noise);
}

McsResult mcs_sample(const GaussianField& field, const std::vector<CameraView>& views, const Denoiser& denoiser,
                     const DiffusionSchedule& schedule, const McsConfig& config, std::uint64_t seed,
                     const RenderSettings& settings, const McsObserver& observer) {
  config.validate(schedule);
  if (static_cast<int>(views.size()) != config.n_views)
    throw Error(ErrorCode::InvalidRange, "expected " + std::to_string(config.n_views) + " views, got " +
                                             std::to_string(views.size()));
  const int n_views = config.n_views;
  McsResult result;
  McsState state;
  state.x.resize(n_views);
  state.mu_hat.resize(n_views);
  state.mu_bar.resize(n_views);
  state.mu_tilde.resize(n_views);
  result.initial.resize(n_views);

#pragma omp parallel for schedule(static)
  for (int n = 0; n < n_views; ++n) {
    const CameraView& v = views[n];
    result.initial[n] = render(field, v, settings).rgb;
    const Image noise = gaussian_noise(v.width, v.height, 3, stream_seed(seed, kInitialNoise, 0, n));
    state.x[n] = forward_noise(schedule, to_model_range(result.initial[n]), config.t_start, noise);
  }

  OptimizerConfig fit;
  fit.lr_position = config.lr_position;
  for (int t = config.t_start; t >= 1; --t) {
    state.t = t;
#pragma omp parallel for schedule(static)
    for (int n = 0; n < n_views; ++n)
      state.mu_hat[n] = predict_x0(schedule, state.x[n], denoiser.predict_noise(state.x[n], t, n), t);

    const double w = config.weight(t);
    if (w == 0.0) {
      // Rectification reduces to mu_hat; the fit cannot influence the result.
      state.temporal = field;
      state.mu_bar = state.mu_hat;
      state.mu_tilde = state.mu_hat;
    } else {
      std::vector<OptimizationTarget> targets;
      targets.reserve(n_views);
      for (int n = 0; n < n_views; ++n) {
        RgbdFrame frame(views[n].width, views[n].height);
        frame.rgb = from_model_range(state.mu_hat[n]);
        frame.mask = Mask(views[n].width, views[n].height, true);
        targets.push_back({views[n], std::move(frame)});
      }
      fit.steps = config.effective_fit_steps(views[0].width, views[0].height);
      fit.seed = stream_seed(seed, kFitShuffle, t, 0);
      state.temporal = optimize(field, targets, fit, settings);
#pragma omp parallel for schedule(static)
      for (int n = 0; n < n_views; ++n)
        state.mu_bar[n] = to_model_range(render(state.temporal, views[n], settings).rgb);
      state.mu_tilde = rectify(state.mu_hat, state.mu_bar, w);
    }

    if (observer) observer(state);
    if (!config.debug_dir.empty()) dump(config.debug_dir, state);

#pragma omp parallel for schedule(static)
    for (int n = 0; n < n_views; ++n) {
      const Image& x = state.x[n];
      Image next;
      if (config.rectify_in_eps) {
        const Image eps = rectify_eps(schedule, x, state.mu_tilde[n], t);
        next = config.stochastic && t > 1
                   ? reverse_step_eps(schedule, x, eps, t,
                                      gaussian_noise(x.width(), x.height(), 3, stream_seed(seed, kStepNoise, t, n)))
                   : reverse_step_eps(schedule, x, eps, t);
      } else {
        next = config.stochastic && t > 1
                   ? reverse_step(schedule, x, state.mu_tilde[n], t,
                                  gaussian_noise(x.width(), x.height(), 3, stream_seed(seed, kStepNoise, t, n)))
                   : reverse_step(schedule, x, state.mu_tilde[n], t);
      }
      state.x[n] = std::move(next);
    }
  }

  result.images.reserve(n_views);
  for (const Image& mu : state.mu_tilde) result.images.push_back(clamped01(from_model_range(mu)));
  for (Image& image : result.initial) image = clamped01(image);
  return result;
}

GaussianField refine_field(const GaussianField& field, const std::vector<CameraView>& views,
                           const std::vector<Image>& images, const std::optional<OptimizationTarget>& input, int steps,
                           std::uint64_t seed, const RenderSettings& settings) {
  if (views.size() != images.size()) throw Error(ErrorCode::ShapeMismatch, "one refined image per view is required");
  std::vector<OptimizationTarget> targets;
  for (std::size_t n = 0; n < views.size(); ++n) {
    RgbdFrame frame(views[n].width, views[n].height);
    if (images[n].width() != views[n].width || images[n].height() != views[n].height || images[n].channels() != 3)
      throw Error(ErrorCode::ShapeMismatch, "refined image does not match its view");
    frame.rgb = images[n];
    frame.mask = Mask(views[n].width, views[n].height, true);
    targets.push_back({views[n], std::move(frame)});
  }
  if (input) targets.push_back(*input);
  if (targets.empty()) throw Error(ErrorCode::NoTargets, "refine_field needs refined views or an input frame");
  OptimizerConfig config;
  config.steps = steps;
  config.seed = seed;
  return optimize(field, targets, config, settings);
}

GaussianField sds_refine(const GaussianField& field, const std::vector<CameraView>& views, const Denoiser& denoiser,
                         const DiffusionSchedule& schedule, int iterations, std::uint64_t seed,
                         const SdsConfig& config, const RenderSettings& settings) {
  if (iterations < 0) throw Error(ErrorCode::InvalidRange, "iterations must be non-negative");
  if (views.empty()) throw Error(ErrorCode::NoTargets, "sds_refine needs at least one view");
  config.optimizer.validate();
  const int t_lo = std::max(1, static_cast<int>(std::ceil(config.t_min_fraction * schedule.steps)));
  const int t_hi = std::min(schedule.steps, static_cast<int>(std::floor(config.t_max_fraction * schedule.steps)));
  if (t_lo > t_hi) throw Error(ErrorCode::InvalidRange, "empty SDS timestep range");

  GaussianField current = field;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_view(0, static_cast<int>(views.size()) - 1);
  std::uniform_int_distribution<int> pick_t(t_lo, t_hi);
  for (int it = 0; it < iterations; ++it) {
    const int n = pick_view(rng);
    const int t = pick_t(rng);
    const CameraView& v = views[n];
    const RenderOutput out = render(current, v, settings);
    const Image eps = gaussian_noise(v.width, v.height, 3, rng());
    const Image x_t = forward_noise(schedule, to_model_range(out.rgb), t, eps);
    const Image eps_hat = denoiser.predict_noise(x_t, t, n);
    // Model range is 2 rgb - 1, hence the factor 2 on the display-range gradient.
    const double weight = schedule.B[t] * schedule.B[t];
    RenderUpstream upstream;
    upstream.rgb = axpby(2.0 * weight, eps_hat, -2.0 * weight, eps);
    FieldGradients grads = render_backward(current, v, upstream, settings);
    if (config.appearance_only) {
      const std::vector<Eigen::Vector3d> color = std::move(grads.color);
      grads = FieldGradients(current.size());
      grads.color = color;
    }
    apply_sgd_step(current, grads, config.optimizer);
  }
  return current;
}

Image box_blur(const Image& image, int radius) {
  if (radius < 0) throw Error(ErrorCode::InvalidRange, "blur radius must be non-negative");
  const int w = image.width(), h = image.height(), ch = image.channels();
  const double norm = 1.0 / (2 * radius + 1);
  Image tmp(w, h, ch), out(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int d = -radius; d <= radius; ++d) s += image.at(std::clamp(x + d, 0, w - 1), y, c);
        tmp.at(x, y, c) = s * norm;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int d = -radius; d <= radius; ++d) s += tmp.at(x, std::clamp(y + d, 0, h - 1), c);
        out.at(x, y, c) = s * norm;
      }
  return out;
}

StructuredBiasOracle::StructuredBiasOracle(DiffusionSchedule schedule, std::vector<Image> targets,
                                           std::vector<Image> biases, double magnitude, double blur_gain,
                                           int blur_radius)
    : schedule_(std::move(schedule)),
      targets_(std::move(targets)),
      biases_(std::move(biases)),
      magnitude_(magnitude),
      blur_gain_(blur_gain) {
  if (biases_.size() != targets_.size())
    throw Error(ErrorCode::ShapeMismatch, "one bias field per target view is required");
  for (std::size_t n = 0; n < targets_.size(); ++n) {
    if (!biases_[n].same_shape(targets_[n])) throw Error(ErrorCode::ShapeMismatch, "bias and target shapes differ");
    blurred_.push_back(box_blur(targets_[n], blur_radius));
  }
}

Image StructuredBiasOracle::clean_estimate(int t, int view) const {
  check_t(schedule_, t);
  const std::size_t n = static_cast<std::size_t>(view);
  const double ratio = schedule_.B[t] / schedule_.A[t];
  const double rho = std::min(1.0, blur_gain_ * ratio);
  return axpby(1.0, axpby(1.0 - rho, targets_.at(n), rho, blurred_.at(n)), -magnitude_ * ratio, biases_.at(n));
}

Image StructuredBiasOracle::predict_noise(const Image& x_t, int t, int view) const {
  return rectify_eps(schedule_, x_t, clean_estimate(t, view), t);
}

}  // namespace splatscape
