#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "splatscape/error.hpp"
#include "splatscape/synthetic.hpp"
#include "splatscape/warp.hpp"
#include "support.hpp"

using namespace splatscape;

namespace {

RgbdFrame plane_frame(int w, int h, double depth) {
  RgbdFrame f(w, h);
  f.mask = Mask(w, h, true);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.depth.at(x, y) = depth;
      f.rgb.at(x, y, 0) = x / double(w);
      f.rgb.at(x, y, 1) = y / double(h);
    }
  return f;
}

// Synthetic depth with a rectangular hole in the middle.
RgbdFrame holed_frame(int w, int h) {
  RgbdFrame f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.depth.at(x, y) = 1.5 + 0.03 * x + 0.02 * y + 0.2 * std::sin(0.3 * x * y / w);
      f.mask.set(x, y, !(x >= w / 3 && x < 2 * w / 3 && y >= h / 4 && y < 3 * h / 4));
    }
  return f;
}

Image estimate_from(const RgbdFrame& f, double a, double c) {
  Image est(f.width(), f.height(), 1);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) est.at(x, y) = a * (1.0 / f.depth.at(x, y) + 0.1 * x) + c;
  return est;
}

}  // namespace

TEST_CASE("render_partial: empty field is all holes") {
  const CameraView v = default_camera(24, 16);
  const RgbdFrame f = render_partial(GaussianField{}, v);
  CHECK(f.mask.count() == 0);
  CHECK_THROWS_AS(render_partial(GaussianField{}, v, 1.0), Error);
}

TEST_CASE("render_partial: mask is exactly alpha >= threshold and holes grow with it") {
  const CameraView v = default_camera(32, 32);
  const GaussianField field = testing::random_scene(4, 30, v);
  const RenderOutput out = render(field, v);
  std::size_t last_holes = 0;
  for (double thr : {0.05, 0.2, 0.5, 0.8, 0.95}) {
    const RgbdFrame f = render_partial(field, v, thr);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) REQUIRE(f.mask(x, y) == (out.alpha.at(x, y) >= thr));
    const std::size_t holes = f.mask.inverted().count();
    CHECK(holes >= last_holes);
    last_holes = holes;
  }
}

TEST_CASE("render_partial: a lifted source view is covered") {
  const CameraView v = synthetic_view(32, 32);
  const RgbdFrame src = render_synthetic(v);
  const RgbdFrame f = render_partial(lift_pixels(v, src), v);
  CHECK(f.mask.count() >= static_cast<std::size_t>(0.99 * 32 * 32));
}

TEST_CASE("forward_warp: identity pose reproduces the input") {
  const CameraView v = synthetic_view(24, 20);
  const RgbdFrame src = render_synthetic(v);
  const RgbdFrame out = forward_warp(v, src, v);
  CHECK(out.mask == src.mask);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 24; ++x) {
      REQUIRE(out.depth.at(x, y) == doctest::Approx(src.depth.at(x, y)).epsilon(1e-12));
      REQUIRE(out.rgb.at(x, y, 0) == src.rgb.at(x, y, 0));
    }
}

TEST_CASE("forward_warp: moving toward a fronto-parallel plane reduces depth by the step") {
  const CameraView v = default_camera(30, 30);
  CameraView closer = v;
  closer.pose.translation = {0.0, 0.0, -0.5};
  const RgbdFrame out = forward_warp(v, plane_frame(30, 30, 2.0), closer);
  REQUIRE(out.mask.count() > 0);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x)
      if (out.mask(x, y)) REQUIRE(out.depth.at(x, y) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("forward_warp: every output depth is the minimum over source pixels landing there") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 3.0);
  const CameraView src = default_camera(20, 20);
  RgbdFrame frame(20, 20);
  frame.mask = Mask(20, 20, true);
  for (double& d : frame.depth.values()) d = u(rng);
  CameraView dst = src;
  dst.fx = dst.fy = src.fx * 0.6;  // compress so several source pixels share a target
  dst.pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(0.15, Eigen::Vector3d::UnitY()));
  const RgbdFrame out = forward_warp(src, frame, dst);

  Image best(20, 20, 1, std::numeric_limits<double>::infinity());
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      const Eigen::Vector3d c = dst.pose.apply(unproject(src, {x, y}, frame.depth.at(x, y)));
      const long px = std::lround(dst.fx * c.x() / c.z() + dst.cx);
      const long py = std::lround(dst.fy * c.y() / c.z() + dst.cy);
      if (px < 0 || py < 0 || px >= 20 || py >= 20) continue;
      best.at(int(px), int(py)) = std::min(best.at(int(px), int(py)), c.z());
    }
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      REQUIRE(out.mask(x, y) == std::isfinite(best.at(x, y)));
      if (out.mask(x, y)) REQUIRE(out.depth.at(x, y) == doctest::Approx(best.at(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("forward_warp agrees with rendering the lifted field") {
  // Tilted plane z = 2 + 0.3 x seen head-on; depth is exact per pixel.
  const CameraView src = default_camera(48, 48);
  RgbdFrame frame(48, 48);
  frame.mask = Mask(48, 48, true);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      frame.depth.at(x, y) = 2.0 / (1.0 - 0.3 * (x - src.cx) / src.fx);
      frame.rgb.at(x, y, 0) = 0.5 + 0.4 * std::sin(0.5 * x);
      frame.rgb.at(x, y, 1) = 0.5 + 0.4 * std::cos(0.3 * y);
    }
  const GaussianField field = lift_pixels(src, frame);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    CameraView dst = src;
    dst.pose.rotation = Eigen::Quaterniond(
        Eigen::AngleAxisd(0.05 * u(rng), Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized()));
    dst.pose.translation = {0.08 * u(rng), 0.08 * u(rng), 0.08 * u(rng)};
    const RgbdFrame warped = forward_warp(src, frame, dst);
    const RgbdFrame rendered = render_partial(field, dst);
    double err = 0.0, depth_sum = 0.0;
    int n = 0;
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x)
        if (warped.mask(x, y) && rendered.mask(x, y)) {
          err += std::abs(warped.depth.at(x, y) - rendered.depth.at(x, y));
          depth_sum += warped.depth.at(x, y);
          ++n;
        }
    REQUIRE(n > 48 * 48 / 2);
    CHECK(err < 0.01 * depth_sum);
  }
}

TEST_CASE("align_depth: exact affine corruption is undone") {
  RgbdFrame f = holed_frame(32, 24);
  Image est(32, 24, 1);
  for (std::size_t i = 0; i < est.size(); ++i) est.values()[i] = 2.0 * f.depth.values()[i] + 1.0;
  const DepthAlignment a = align_depth(est, f);
  CHECK(a.scale == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.shift == doctest::Approx(-0.5).epsilon(1e-12));
  for (std::size_t i = 0; i < est.size(); ++i) CHECK(std::abs(a.depth.values()[i] - f.depth.values()[i]) < 1e-9);

  Image same(32, 24, 1);
  for (std::size_t i = 0; i < est.size(); ++i) same.values()[i] = f.depth.values()[i];
  const DepthAlignment b = align_depth(same, f);
  CHECK(b.scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(b.shift) < 1e-12);
}

TEST_CASE("align_depth is invariant to affine pre-corruption of the estimate") {
  const RgbdFrame f = holed_frame(40, 30);
  const Image est = estimate_from(f, 1.0, 0.0);
  const DepthAlignment ref = align_depth(est, f);
  for (auto [a, c] : {std::pair{3.0, -2.0}, std::pair{0.01, 5.0}, std::pair{-1.5, 0.3}}) {
    const DepthAlignment other = align_depth(estimate_from(f, a, c), f);
    CHECK(max_abs_diff(other.depth, ref.depth) < 1e-9);
  }
}

TEST_CASE("align_depth: valid pixels keep rendered depth and the residual fades over the band") {
  const RgbdFrame f = holed_frame(40, 30);
  const Image est = estimate_from(f, 1.0, 0.0);
  const int band = 4;
  const DepthAlignment a = align_depth(est, f, band);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) {
      const double aligned = a.scale * est.at(x, y) + a.shift;
      if (f.mask(x, y)) {
        REQUIRE(std::abs(a.depth.at(x, y) - f.depth.at(x, y)) < 1e-6);
        continue;
      }
      // Chessboard distance to the nearest valid pixel.
      int dist = 1 << 20;
      for (int v = 0; v < 30; ++v)
        for (int u = 0; u < 40; ++u)
          if (f.mask(u, v)) dist = std::min(dist, std::max(std::abs(u - x), std::abs(v - y)));
      if (dist > band) REQUIRE(a.depth.at(x, y) == aligned);
      if (dist == 1) {
        // First ring carries a full residual from one adjacent valid pixel.
        bool matches = false;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int u = x + dx, v = y + dy;
            if (u < 0 || v < 0 || u >= 40 || v >= 30 || !f.mask(u, v)) continue;
            const double r = f.depth.at(u, v) - (a.scale * est.at(u, v) + a.shift);
            matches |= std::abs(a.depth.at(x, y) - (aligned + r)) < 1e-12;
          }
        REQUIRE(matches);
      }
    }
}

TEST_CASE("align_depth: degenerate inputs") {
  const RgbdFrame f = holed_frame(16, 16);
  CHECK_THROWS_AS(align_depth(Image(16, 16, 1, 3.0), f), Error);
  try {
    align_depth(Image(16, 16, 1, 3.0), f);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateDepth);
  }
  RgbdFrame single(4, 4);
  single.mask.set(1, 1, true);
  single.depth.at(1, 1) = 2.0;
  CHECK_THROWS_AS(align_depth(testing::random_image(1, 4, 4, 1), single), Error);
  CHECK_THROWS_AS(align_depth(Image(5, 4, 1), single), Error);
}
