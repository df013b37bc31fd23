#pragma once

// Shared helpers for the unit and acceptance suites: random scene generators
// and the central-difference gradient oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "splatscape/gaussian_field.hpp"
#include "splatscape/render.hpp"

namespace splatscape::testing {

inline GaussianField random_scene(std::uint64_t seed, int count, const CameraView& view) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  GaussianField field;
  for (int i = 0; i < count; ++i) {
    GaussianKernel k;
    const double z = 1.5 + 1.5 * u01(rng);
    const double px = view.width * (0.1 + 0.8 * u01(rng));
    const double py = view.height * (0.1 + 0.8 * u01(rng));
    k.position = unproject(view, {px, py}, z);
    k.color = {u01(rng), u01(rng), u01(rng)};
    k.opacity_logit = -1.5 + 3.0 * u01(rng);
    for (int a = 0; a < 3; ++a) k.log_scale[a] = std::log(0.03 + 0.12 * u01(rng));
    std::normal_distribution<double> n01;
    k.rotation = Eigen::Vector4d(n01(rng), n01(rng), n01(rng), n01(rng)).normalized();
    field.push_back(k, 0);
  }
  return field;
}

inline Image random_image(std::uint64_t seed, int w, int h, int c, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(w, h, c);
  for (double& v : img.values()) v = u(rng);
  return img;
}

inline double dot(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

struct GroupErrors {
  // position, color, opacity, scale, rotation
  std::array<double, 5> relative{};
  double worst() const { return *std::max_element(relative.begin(), relative.end()); }
};

inline const std::array<std::string, 5> kGroupNames = {"position", "color", "opacity", "scale",
                                                       "rotation"};

/// Compares render_backward against central differences of
/// L = <u_rgb, rgb> + <u_depth, depth> + <u_alpha, alpha>, returning the
/// relative L2 error of each parameter group.
inline GroupErrors gradient_check(const GaussianField& field, const CameraView& view,
                                  const RenderUpstream& up, const RenderSettings& settings,
                                  double h = 1e-4) {
  auto loss = [&](const GaussianField& f) {
    const RenderOutput out = render(f, view, settings);
    return dot(out.rgb, up.rgb) + dot(out.depth, up.depth) + dot(out.alpha, up.alpha);
  };
  const FieldGradients analytic = render_backward(field, view, up, settings);

  std::array<double, 5> err2{}, ref2{};
  auto probe = [&](int group, double analytic_value, const std::function<double&(GaussianField&)>& slot) {
    GaussianField plus = field, minus = field;
    slot(plus) += h;
    slot(minus) -= h;
    const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
    err2[group] += (analytic_value - fd) * (analytic_value - fd);
    ref2[group] += fd * fd;
  };
  for (std::size_t i = 0; i < field.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      probe(0, analytic.position[i][a], [&](GaussianField& f) -> double& { return f.kernels[i].position[a]; });
      probe(1, analytic.color[i][a], [&](GaussianField& f) -> double& { return f.kernels[i].color[a]; });
      probe(3, analytic.log_scale[i][a], [&](GaussianField& f) -> double& { return f.kernels[i].log_scale[a]; });
    }
    probe(2, analytic.opacity_logit[i], [&](GaussianField& f) -> double& { return f.kernels[i].opacity_logit; });
    for (int a = 0; a < 4; ++a)
      probe(4, analytic.rotation[i][a], [&](GaussianField& f) -> double& { return f.kernels[i].rotation[a]; });
  }
  GroupErrors out;
  for (int g = 0; g < 5; ++g) out.relative[g] = ref2[g] > 0.0 ? std::sqrt(err2[g] / ref2[g]) : std::sqrt(err2[g]);
  return out;
}

inline RenderUpstream random_upstream(std::uint64_t seed, const CameraView& view) {
  return {random_image(seed, view.width, view.height, 3), random_image(seed + 1, view.width, view.height, 1),
          random_image(seed + 2, view.width, view.height, 1)};
}

/// Zeroes the depth upstream where the unperturbed render has alpha below
/// `min_alpha`. Normalised depth has curvature ~1/alpha^2 there, which a
/// 1e-4 central difference cannot resolve.
inline RenderUpstream covered_depth_only(RenderUpstream up, const GaussianField& field, const CameraView& view,
                                         const RenderSettings& settings, double min_alpha = 1e-2) {
  const RenderOutput out = render(field, view, settings);
  for (std::size_t i = 0; i < up.depth.size(); ++i)
    if (out.alpha.values()[i] < min_alpha) up.depth.values()[i] = 0.0;
  return up;
}

}  // namespace splatscape::testing
