#include <cmath>

#include "doctest.h"
#include "splatscape/error.hpp"
#include "splatscape/metrics.hpp"
#include "splatscape/render.hpp"
#include "splatscape/warp.hpp"
#include "support.hpp"

using namespace splatscape;

namespace {

RgbdFrame textured_plane(int res, double depth) {
  RgbdFrame f(res, res);
  f.mask = Mask(res, res, true);
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x) {
      f.depth.at(x, y) = depth;
      f.rgb.at(x, y, 0) = 0.5 + 0.3 * std::sin(0.4 * x);
      f.rgb.at(x, y, 1) = 0.5 + 0.3 * std::cos(0.3 * y);
      f.rgb.at(x, y, 2) = 0.5 + 0.2 * std::sin(0.2 * (x + y));
    }
  return f;
}

}  // namespace

TEST_CASE("all_view_pairs enumerates ordered pairs") {
  CHECK(all_view_pairs(1).empty());
  const auto p = all_view_pairs(3);
  CHECK(p.size() == 6);
  CHECK(p.front() == ViewPair{0, 1});
  CHECK(p.back() == ViewPair{2, 1});
}

TEST_CASE("consistency_metric: identical views give zero") {
  const CameraView v = default_camera(16, 16);
  const RgbdFrame f = textured_plane(16, 2.0);
  CHECK(consistency_metric({v, v}, {f, f}, all_view_pairs(2)) == 0.0);
}

TEST_CASE("consistency_metric: renders of one field from two views of a textured plane") {
  // Nearest-pixel warping leaves up to half a pixel of misregistration, so the
  // floor of the metric scales with the texture gradient (here <= 0.05 / px).
  const CameraView a = default_camera(40, 40);
  RgbdFrame plane = textured_plane(40, 2.0);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      plane.rgb.at(x, y, 0) = 0.5 + 0.3 * std::sin(0.15 * x);
      plane.rgb.at(x, y, 1) = 0.5 + 0.3 * std::cos(0.12 * y);
      plane.rgb.at(x, y, 2) = 0.5;
    }
  const GaussianField field = lift_pixels(a, plane);
  CameraView b = a;
  b.pose.translation = {0.03, -0.02, 0.01};
  b.pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(0.02, Eigen::Vector3d::UnitY()));
  const std::vector<CameraView> views = {a, b};
  const std::vector<RgbdFrame> frames = {render_partial(field, a), render_partial(field, b)};
  const double metric = consistency_metric(views, frames, all_view_pairs(2));
  CHECK(metric > 0.0);
  CHECK(metric < 0.02);
}

TEST_CASE("consistency_metric: matches a direct per-pair oracle and skips empty pairs") {
  const CameraView a = default_camera(12, 12);
  CameraView b = a;
  b.pose.translation = {0.05, 0.0, 0.0};
  CameraView away = a;
  away.pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(3.14159, Eigen::Vector3d::UnitY()));
  RgbdFrame fa = textured_plane(12, 2.0), fb = textured_plane(12, 2.0);
  fb.rgb = testing::random_image(3, 12, 12, 3, 0.0, 1.0);
  const std::vector<CameraView> views = {a, b, away};
  const std::vector<RgbdFrame> frames = {fa, fb, textured_plane(12, 2.0)};

  const RgbdFrame w = forward_warp(a, fa, b);
  double err = 0.0;
  int n = 0;
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x)
      if (w.mask(x, y))
        for (int c = 0; c < 3; ++c, ++n) err += std::abs(w.rgb.at(x, y, c) - fb.rgb.at(x, y, c));
  REQUIRE(n > 0);
  // The pair into the opposite-facing view has no overlap and is skipped.
  CHECK(consistency_metric(views, frames, {{0, 1}, {0, 2}}) == doctest::Approx(err / n).epsilon(1e-12));
  try {
    consistency_metric(views, frames, {{0, 2}});
    FAIL("expected EmptyOverlap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyOverlap);
  }
  CHECK_THROWS_AS(consistency_metric(views, frames, {}), Error);
  CHECK_THROWS_AS(consistency_metric(views, frames, {{0, 5}}), Error);
}

TEST_CASE("psnr") {
  const Mask all(8, 8, true);
  const Image a = testing::random_image(1, 8, 8, 3, 0.0, 1.0);
  CHECK(psnr(a, a, all) == kPsnrCap);
  CHECK(psnr(Image(8, 8, 3, 0.5), Image(8, 8, 3, 0.6), all) == doctest::Approx(20.0).epsilon(1e-9));
  const Image b = testing::random_image(2, 8, 8, 3, 0.0, 1.0);
  Mask half(8, 8);
  double sum = 0.0;
  int n = 0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if ((x + y) % 2 == 0) {
        half.set(x, y, true);
        for (int c = 0; c < 3; ++c, ++n) sum += std::pow(a.at(x, y, c) - b.at(x, y, c), 2);
      }
  CHECK(psnr(a, b, half) == doctest::Approx(10.0 * std::log10(n / sum)).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(a, b, Mask(8, 8)), Error);
  CHECK_THROWS_AS(psnr(a, Image(8, 7, 3), all), Error);
}

TEST_CASE("laplacian_variance") {
  CHECK(laplacian_variance(Image(6, 6, 3, 0.7)) == 0.0);
  Image ramp(6, 6, 1);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) ramp.at(x, y) = 0.1 * x + 0.05 * y;
  CHECK(laplacian_variance(ramp) < 1e-28);
  Image checker(6, 6, 1);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) checker.at(x, y) = (x + y) % 2;
  // Laplacian alternates +4 / -4 over the 4 x 4 interior: mean 0, variance 16.
  CHECK(laplacian_variance(checker) == doctest::Approx(16.0));
  CHECK_THROWS_AS(laplacian_variance(Image(2, 5, 1)), Error);
}
