#include "splatscape/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "splatscape/error.hpp"

namespace splatscape {

namespace {

constexpr int kSsimRadius = 5;  // 11 x 11 window
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;
// L1 residuals this small are rounding noise; treating them as zero keeps an
// exactly fitted target a fixed point of SGD instead of a +-lr oscillation.
constexpr double kL1DeadZone = 1e-12;

// Zero-padded uniform 11x11 mean filter, applied channelwise. The operator is
// symmetric, so it is also its own adjoint in the backward pass.
Image box_mean(const Image& in) {
  const int w = in.width(), h = in.height(), ch = in.channels();
  Image tmp(w, h, ch);
  Image out(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int dx = -kSsimRadius; dx <= kSsimRadius; ++dx) {
          const int xx = x + dx;
          if (xx >= 0 && xx < w) s += in.at(xx, y, c);
        }
        tmp.at(x, y, c) = s;
      }
  constexpr double norm = 1.0 / ((2 * kSsimRadius + 1) * (2 * kSsimRadius + 1));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int dy = -kSsimRadius; dy <= kSsimRadius; ++dy) {
          const int yy = y + dy;
          if (yy >= 0 && yy < h) s += tmp.at(x, yy, c);
        }
        out.at(x, y, c) = s * norm;
      }
  return out;
}

Image product(const Image& a, const Image& b) {
  Image out(a.width(), a.height(), a.channels());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  return out;
}

struct SsimMoments {
  Image mu_x, mu_y, e_xx, e_yy, e_xy;
};

SsimMoments moments(const Image& x, const Image& y) {
  return {box_mean(x), box_mean(y), box_mean(product(x, x)), box_mean(product(y, y)),
          box_mean(product(x, y))};
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(lr_position > 0 && lr_color > 0 && lr_scale > 0 && lr_opacity > 0 && lr_rotation > 0)) {
    throw Error(ErrorCode::InvalidRange, "learning rates must be positive");
  }
  if (steps < 0) throw Error(ErrorCode::InvalidRange, "steps must be non-negative");
  if (!(lambda_dssim >= 0.0 && lambda_dssim <= 1.0)) {
    throw Error(ErrorCode::InvalidRange, "lambda_dssim must lie in [0, 1]");
  }
}

Image ssim_map(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "ssim operands differ in shape");
  const SsimMoments m = moments(a, b);
  Image out(a.width(), a.height(), a.channels());
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double mx = m.mu_x.values()[i], my = m.mu_y.values()[i];
    const double sxx = m.e_xx.values()[i] - mx * mx;
    const double syy = m.e_yy.values()[i] - my * my;
    const double sxy = m.e_xy.values()[i] - mx * my;
    o[i] = ((2 * mx * my + kSsimC1) * (2 * sxy + kSsimC2)) /
           ((mx * mx + my * my + kSsimC1) * (sxx + syy + kSsimC2));
  }
  return out;
}

LossResult photometric_loss(const Image& rendered, const Image& target, const Mask& mask,
                            double lambda_dssim) {
  if (!rendered.same_shape(target) || mask.width() != rendered.width() ||
      mask.height() != rendered.height()) {
    throw Error(ErrorCode::ShapeMismatch, "loss operands differ in shape");
  }
  const int w = rendered.width(), h = rendered.height(), ch = rendered.channels();
  LossResult result;
  result.gradient = Image(w, h, ch);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < ch; ++c) {
        const double diff = rendered.at(x, y, c) - target.at(x, y, c);
        result.value += (1.0 - lambda_dssim) * std::abs(diff);
        result.gradient.at(x, y, c) =
            (1.0 - lambda_dssim) * (diff > kL1DeadZone ? 1.0 : (diff < -kL1DeadZone ? -1.0 : 0.0));
      }
    }
  if (lambda_dssim == 0.0) return result;

  const SsimMoments m = moments(rendered, target);
  Image g_mu(w, h, ch), g_exx(w, h, ch), g_exy(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < ch; ++c) {
        const std::size_t i = rendered.index(x, y, c);
        const double mx = m.mu_x.values()[i], my = m.mu_y.values()[i];
        const double sxx = m.e_xx.values()[i] - mx * mx;
        const double syy = m.e_yy.values()[i] - my * my;
        const double sxy = m.e_xy.values()[i] - mx * my;
        const double n1 = 2 * mx * my + kSsimC1, d1 = mx * mx + my * my + kSsimC1;
        const double n2 = 2 * sxy + kSsimC2, d2 = sxx + syy + kSsimC2;
        const double ssim = (n1 * n2) / (d1 * d2);
        result.value += lambda_dssim * (1.0 - ssim);

        const double g = -lambda_dssim;  // dLoss/dSSIM
        const double ds_dmu = (2 * my / d1 - n1 * 2 * mx / (d1 * d1)) * n2 / d2;
        const double ds_dsxx = -(n1 / d1) * n2 / (d2 * d2);
        const double ds_dsxy = (n1 / d1) * 2.0 / d2;
        g_mu.values()[i] = g * (ds_dmu - 2.0 * mx * ds_dsxx - my * ds_dsxy);
        g_exx.values()[i] = g * ds_dsxx;
        g_exy.values()[i] = g * ds_dsxy;
      }
    }
  const Image b_mu = box_mean(g_mu);
  const Image b_exx = box_mean(g_exx);
  const Image b_exy = box_mean(g_exy);
  auto gv = result.gradient.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    gv[i] += b_mu.values()[i] + 2.0 * rendered.values()[i] * b_exx.values()[i] +
             target.values()[i] * b_exy.values()[i];
  }
  return result;
}

void apply_sgd_step(GaussianField& field, const FieldGradients& grads, const OptimizerConfig& config) {
  for (std::size_t i = 0; i < field.size(); ++i) {
    GaussianKernel& k = field.kernels[i];
    k.position -= config.lr_position * grads.position[i];
    k.color -= config.lr_color * grads.color[i];
    k.color = k.color.cwiseMax(0.0).cwiseMin(1.0);
    k.opacity_logit -= config.lr_opacity * grads.opacity_logit[i];
    k.log_scale -= config.lr_scale * grads.log_scale[i];
    k.rotation -= config.lr_rotation * grads.rotation[i];
    const double norm = k.rotation.norm();
    k.rotation = norm > 0.0 ? Eigen::Vector4d(k.rotation / norm) : Eigen::Vector4d(1, 0, 0, 0);
  }
}

GaussianField optimize(const GaussianField& field, const std::vector<OptimizationTarget>& targets,
                       const OptimizerConfig& config, const RenderSettings& settings) {
  if (targets.empty()) throw Error(ErrorCode::NoTargets, "optimize needs at least one target");
  config.validate();
  GaussianField current = field;
  if (config.steps == 0 || current.empty()) return current;

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(targets.size());
  std::size_t cursor = order.size();
  for (int step = 0; step < config.steps; ++step) {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const OptimizationTarget& target = targets[order[cursor++]];
    const RenderOutput out = render(current, target.view, settings);
    LossResult loss = photometric_loss(out.rgb, target.frame.rgb, target.frame.mask, config.lambda_dssim);
    RenderUpstream upstream;
    upstream.rgb = std::move(loss.gradient);
    const FieldGradients grads = render_backward(current, target.view, upstream, settings);
    apply_sgd_step(current, grads, config);
  }
  return current;
}

}  // namespace splatscape
