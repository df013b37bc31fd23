// Acceptance gate: one PASS/FAIL line per criterion, tolerances and runtime
// limits pinned below. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include "../replay_scenarios.hpp"
#include "../support.hpp"
#include "splatscape/adapters/schema.hpp"
#include "splatscape/config.hpp"
#include "splatscape/diffusion.hpp"
#include "splatscape/error.hpp"
#include "splatscape/io.hpp"
#include "splatscape/mcs.hpp"
#include "splatscape/metrics.hpp"
#include "splatscape/pipeline.hpp"
#include "splatscape/synthetic.hpp"
#include "splatscape/trajectory.hpp"
#include "splatscape/warp.hpp"

using namespace splatscape;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr double kScheduleTol = 1e-12;
// Criterion 2
constexpr double kRoundTripTol = 1e-5;
// Criterion 3
constexpr double kGradStep = 1e-4;
constexpr double kGradTol = 1e-3;
constexpr int kGradScenes = 10;
constexpr int kGradMaxKernels = 20;
// Criterion 4
constexpr double kChainTol = 1e-9;
// Criterion 5
constexpr double kFixedPointMae = 1e-3;
// Criterion 6
constexpr double kMinRelativeReduction = 0.20;
constexpr double kBiasMagnitude6 = 10.0;
// Criterion 7
constexpr double kBiasMagnitude7 = 2.0;
constexpr int kSdsIterations = 640;
constexpr int kRefineSteps = 640;
// Criterion 8
constexpr double kAlignTol = 1e-9;

// Runtime limits in seconds.
constexpr double kLimit[11] = {0, 1, 5, 120, 1, 300, 900, 1200, 10, 600, 5};

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  // Criterion 9 times each of its two runs itself.
  const bool in_time = id == 9 || secs < kLimit[id];
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("criterion %2d %-34s %s  (%s; %.2f s, limit %.0f s)\n", id, name, pass ? "PASS" : "FAIL",
              o.detail.c_str(), secs, kLimit[id]);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

/// The desk-preset MCS scenario: a field lifted from the synthetic desk at
/// 64x64 and four views on a small spiral.
struct Desk {
  GaussianField field;
  std::vector<CameraView> views;
  std::vector<Image> renders;   // model range
  std::vector<RgbdFrame> geometry;  // rendered depth and coverage
  McsConfig config;

  Desk() {
    const CameraView base = synthetic_view(64, 64);
    field = lift_pixels(base, render_synthetic(base));
    SpiralParams p;
    p.radius = 0.125;  // 5% of the 2.5 m median depth
    p.forward = 0.25;
    p.focus_depth = 2.5;
    p.samples = 4;
    views = spiral(base, p).views;
    for (const CameraView& v : views) {
      renders.push_back(to_model_range(render(field, v).rgb));
      geometry.push_back(render_partial(field, v));
    }
    const json desk = preset_overrides("desk");
    config.n_views = desk["refine"]["n_views"];
    config.fit_steps = desk["refine"]["fit_steps"];
    config.resolution = desk["refine"]["resolution"];
  }

  /// consistency_metric of images placed on the field's rendered geometry.
  double consistency(const std::vector<Image>& images) const {
    std::vector<RgbdFrame> frames = geometry;
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i].rgb = images[i];
    return consistency_metric(views, frames, all_view_pairs(views.size()));
  }
};

const Desk& desk() {
  static const Desk d;
  return d;
}

}  // namespace

int main() {
  criterion(1, "schedule identities", [] {
    const DiffusionSchedule s = make_schedule();
    double worst = 0.0;
    for (int t = 1; t <= s.steps; ++t) {
      worst = std::max(worst, std::abs(s.A[t] * s.A[t] + s.B[t] * s.B[t] - 1.0));
      worst = std::max(worst, std::abs(s.s[t] * s.A[t] + s.d[t] - s.A[t - 1]));
    }
    return Outcome{s.steps == 50 && worst <= kScheduleTol, fmt("worst residual %.2e over 50 steps", worst)};
  });

  criterion(2, "oracle round trip from t = 10", [] {
    const DiffusionSchedule s = make_schedule();
    const Image target = testing::random_image(2, 64, 64, 3);
    const OracleDenoiser oracle(s, {target});
    Image x = forward_noise(s, target, 10, gaussian_noise(64, 64, 3, 3));
    for (int t = 10; t >= 1; --t) x = reverse_step(s, x, predict_x0(s, x, oracle.predict_noise(x, t, 0), t), t);
    const double err = max_abs_diff(x, target);
    return Outcome{err <= kRoundTripTol, fmt("Linf %.2e on 64x64", err)};
  });

  criterion(3, "renderer gradients", [] {
    CameraView view = default_camera(32, 32);
    view.pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(0.1, Eigen::Vector3d(0.3, 1, 0).normalized()));
    view.pose.translation = {0.05, -0.02, 0.1};
    RenderSettings settings;
    settings.background = {0.2, 0.4, 0.6};
    double worst = 0.0;
    for (int scene = 0; scene < kGradScenes; ++scene) {
      const int kernels = 11 + scene % (kGradMaxKernels - 10);
      const GaussianField field = testing::random_scene(900 + scene, kernels, view);
      const RenderUpstream up =
          testing::covered_depth_only(testing::random_upstream(70 + scene, view), field, view, settings);
      worst = std::max(worst, testing::gradient_check(field, view, up, settings, kGradStep).worst());
    }
    return Outcome{worst < kGradTol, fmt("worst group relative error %.2e over %.0f scenes", worst, kGradScenes)};
  });

  criterion(4, "rectification algebra", [] {
    const DiffusionSchedule s = make_schedule();
    const CameraView base = synthetic_view(16, 16);
    const GaussianField field = lift_pixels(base, render_synthetic(base));
    SpiralParams p;
    p.radius = 0.1;
    p.focus_depth = 2.5;
    p.samples = 2;
    const auto views = spiral(base, p).views;
    std::vector<Image> renders;
    for (const auto& v : views) renders.push_back(to_model_range(render(field, v).rgb));
    const PerturbedOracle denoiser(s, renders, smooth_bias_fields(2, 16, 16, 4), 5.0);
    McsConfig c;
    c.n_views = 2;
    c.t_start = 4;
    c.fit_steps = 2;
    c.resolution = 16;
    std::vector<std::vector<Image>> xe, xm;
    c.rectify_in_eps = true;
    mcs_sample(field, views, denoiser, s, c, 1, {}, [&](const McsState& st) { xe.push_back(st.x); });
    c.rectify_in_eps = false;
    mcs_sample(field, views, denoiser, s, c, 1, {}, [&](const McsState& st) { xm.push_back(st.x); });
    double chain = 0.0;
    for (std::size_t k = 0; k < xe.size(); ++k)
      for (std::size_t n = 0; n < 2; ++n) chain = std::max(chain, max_abs_diff(xe[k][n], xm[k][n]));

    const Image mu_hat = testing::random_image(5, 12, 10, 3);
    const Image other = testing::random_image(6, 12, 10, 3);
    const bool w0 = max_abs_diff(rectify({mu_hat}, {other}, 0.0)[0], mu_hat) == 0.0;
    const bool self = max_abs_diff(rectify({mu_hat}, {mu_hat}, 0.7)[0], mu_hat) < 1e-15;
    const Image half = scaled(mu_hat, 0.5);
    const double gamma = std_ratio(mu_hat, half);
    const double std_err = std::abs(stddev(rectify({mu_hat}, {half}, 1.0)[0]) - stddev(mu_hat));
    const bool ok = xe.size() == 4 && chain <= kChainTol && w0 && self && std::abs(gamma - 2.0) < 1e-12 &&
                    std_err < 1e-12;
    return Outcome{ok, fmt("mu/eps chain diff %.2e, gamma %.12f, w=0 exact %.0f, std err %.1e", chain, gamma,
                           w0 && self ? 1 : 0, std_err)};
  });

  criterion(5, "MCS fixed point (desk)", [] {
    const Desk& d = desk();
    const DiffusionSchedule s = make_schedule();
    const OracleDenoiser oracle(s, d.renders);
    const McsResult r = mcs_sample(d.field, d.views, oracle, s, d.config, 1);
    double worst = 0.0;
    for (std::size_t n = 0; n < d.views.size(); ++n)
      worst = std::max(worst, mean_abs_diff(r.images[n], from_model_range(d.renders[n])));
    return Outcome{worst <= kFixedPointMae, fmt("worst per-view MAE %.2e over %.0f views", worst, d.views.size())};
  });

  criterion(6, "MCS consistency, w=0.5 vs w=0", [] {
    const Desk& d = desk();
    const DiffusionSchedule s = make_schedule();
    std::string detail;
    bool ok = true;
    for (int seed = 0; seed < 3; ++seed) {
      const PerturbedOracle o(s, d.renders, smooth_bias_fields(4, 64, 64, 100 + seed), kBiasMagnitude6);
      McsConfig c = d.config;
      c.w = 0.5;
      const double rect = d.consistency(mcs_sample(d.field, d.views, o, s, c, seed).images);
      c.w = 0.0;
      const double plain = d.consistency(mcs_sample(d.field, d.views, o, s, c, seed).images);
      const double reduction = 1.0 - rect / plain;
      ok = ok && rect < plain && reduction >= kMinRelativeReduction;
      detail += fmt("seed %.0f: %.4f vs %.4f (-%.0f%%) ", seed, rect, plain, 100 * reduction);
    }
    return Outcome{ok, detail};
  });

  criterion(7, "SDS blur vs MCS consistency", [] {
    const Desk& d = desk();
    const DiffusionSchedule s = make_schedule();
    std::string detail;
    bool ok = true;
    for (int seed = 0; seed < 3; ++seed) {
      const StructuredBiasOracle o(s, d.renders, smooth_bias_fields(4, 64, 64, 100 + seed), kBiasMagnitude7);
      McsConfig c = d.config;
      c.w = 0.5;
      const McsResult m = mcs_sample(d.field, d.views, o, s, c, seed);
      const GaussianField mcs_field = refine_field(d.field, d.views, m.images, std::nullopt, kRefineSteps, seed);
      const GaussianField sds_field = sds_refine(d.field, d.views, o, s, kSdsIterations, seed);
      double lap_mcs = 0.0, lap_sds = 0.0;
      std::vector<RgbdFrame> fm, fs;
      for (const CameraView& v : d.views) {
        fm.push_back(render_partial(mcs_field, v));
        fs.push_back(render_partial(sds_field, v));
        lap_mcs += laplacian_variance(fm.back().rgb) / d.views.size();
        lap_sds += laplacian_variance(fs.back().rgb) / d.views.size();
      }
      const auto pairs = all_view_pairs(d.views.size());
      const double cons_mcs = consistency_metric(d.views, fm, pairs);
      const double cons_sds = consistency_metric(d.views, fs, pairs);
      ok = ok && lap_sds < lap_mcs && cons_mcs <= cons_sds;
      detail += fmt("seed %.0f: lap sds %.5f < mcs %.5f, cons mcs %.4f", seed, lap_sds, lap_mcs, cons_mcs) +
                fmt(" <= sds %.4f; ", cons_sds);
    }
    return Outcome{ok, detail};
  });

  criterion(8, "geometry oracles", [] {
    // Occlusion: brute force over 100 kernels and 3 views.
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DepthObservation> priors;
    for (int i = 0; i < 3; ++i) {
      CameraView v = default_camera(24, 20);
      v.pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(0.15 * (i - 1), Eigen::Vector3d::UnitY()));
      v.pose.translation = {0.2 * (i - 1), 0.05 * i, 0.0};
      Image depth(24, 20, 1);
      for (double& z : depth.values()) z = u(rng) < 0.1 ? 0.0 : 1.0 + 3.0 * u(rng);
      priors.push_back({v, depth});
    }
    const GaussianField candidates = testing::random_scene(81, 100, priors[1].view);
    const GaussianField kept = filter_occlusion(candidates, priors, 0.02);
    std::vector<Eigen::Vector3d> expected;
    for (const GaussianKernel& k : candidates.kernels) {
      bool occluded = false;
      for (const auto& p : priors) {
        const Eigen::Vector3d c = p.view.pose.rotation * k.position + p.view.pose.translation;
        if (c.z() <= 0) continue;
        const double px = std::round(p.view.fx * c.x() / c.z() + p.view.cx);
        const double py = std::round(p.view.fy * c.y() / c.z() + p.view.cy);
        if (px < 0 || py < 0 || px >= 24 || py >= 20) continue;
        const double rec = p.depth.at(static_cast<int>(px), static_cast<int>(py));
        if (rec > 0 && c.z() < rec * (1.0 - 0.02)) occluded = true;
      }
      if (!occluded) expected.push_back(k.position);
    }
    bool occlusion_ok = kept.size() == expected.size() && kept.size() < candidates.size();
    for (std::size_t i = 0; occlusion_ok && i < kept.size(); ++i)
      occlusion_ok = kept.kernels[i].position == expected[i];

    // Boundary: neighbourhood scan on step scenes.
    bool boundary_ok = true;
    for (int trial = 0; trial < 10; ++trial) {
      RgbdFrame f(17, 13);
      const int step = 3 + trial;
      for (int y = 0; y < 13; ++y)
        for (int x = 0; x < 17; ++x) {
          f.depth.at(x, y) = x < step ? 1.0 + 0.01 * y : 2.0 + 0.5 * trial;
          f.mask.set(x, y, (x * 7 + y * 3 + trial) % 11 != 0);
        }
      Mask oracle(17, 13);
      for (int y = 0; y < 13; ++y)
        for (int x = 0; x < 17; ++x) {
          if (!f.mask(x, y)) continue;
          bool drop = false;
          for (auto [dx, dy] : {std::pair{-1, 0}, std::pair{1, 0}, std::pair{0, -1}, std::pair{0, 1}}) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= 17 || ny >= 13 || !f.mask(nx, ny)) continue;
            if (std::abs(f.depth.at(nx, ny) - f.depth.at(x, y)) / f.depth.at(x, y) > 0.1) drop = true;
          }
          oracle.set(x, y, !drop);
        }
      boundary_ok = boundary_ok && filter_boundary(f, 0.1) == oracle;
    }

    // Depth alignment: exact affine corruptions.
    double align_err = 0.0;
    for (auto [a, b] : {std::pair{2.0, 1.0}, std::pair{0.3, -0.2}, std::pair{5.0, 0.0}}) {
      RgbdFrame f(32, 24);
      for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x) {
          f.depth.at(x, y) = 1.5 + 0.03 * x + 0.02 * y + 0.2 * std::sin(0.3 * x * y / 32.0);
          f.mask.set(x, y, !(x >= 10 && x < 21 && y >= 6 && y < 18));
        }
      Image est(32, 24, 1);
      for (std::size_t i = 0; i < est.size(); ++i) est.values()[i] = a * f.depth.values()[i] + b;
      align_err = std::max(align_err, max_abs_diff(align_depth(est, f).depth, f.depth));
    }
    const bool ok = occlusion_ok && boundary_ok && align_err <= kAlignTol;
    return Outcome{ok, fmt("occlusion %.0f/100 kept as oracle, boundary match %.0f, alignment err %.2e",
                           kept.size(), boundary_ok ? 1 : 0, align_err)};
  });

  criterion(9, "end-to-end determinism (desk)", [] {
    const fs::path root = fs::temp_directory_path() / "splatscape_acceptance_e2e";
    fs::remove_all(root);
    double slowest = 0.0;
    for (const char* run : {"a", "b"}) {
      const json flags = {{"seed", 0}, {"input", "synthetic:desk"}, {"preset", "desk"},
                          {"output_dir", (root / run).string()}};
      const auto t0 = Clock::now();
      run_pipeline(resolve_config(json::object(), flags), Stage::All);
      slowest = std::max(slowest, std::chrono::duration<double>(Clock::now() - t0).count());
    }
    bool same = read_file(root / "a" / "manifest.json") == read_file(root / "b" / "manifest.json");
    int plys = 0;
    for (const char* stage : {"scaffold", "coarse", "refine"}) {
      const fs::path rel = fs::path(stage) / "field.ply";
      same = same && read_file(root / "a" / rel) == read_file(root / "b" / rel);
      ++plys;
    }
    return Outcome{same && slowest < kLimit[9],
                   fmt("manifest and %.0f PLYs identical: %.0f, slowest run %.1f s", plys, same ? 1 : 0, slowest)};
  });

  criterion(10, "protocol conformance", [] {
    const fs::path source = SPLATSCAPE_SOURCE_DIR;
    auto schema = [&](const std::string& name) {
      std::ifstream in(source / "schemas" / (name + ".json"));
      return json::parse(in);
    };
    auto prefix = [](Role r) { return r == Role::Caption || r == Role::Vqa ? std::string("text") : std::string(to_string(r)); };
    const replay::Mocks mocks;
    int bodies = 0, violations = 0, inpaint_checked = 0, identity_breaks = 0;
    for (const replay::Scenario& s : replay::scenarios()) {
      violations += static_cast<int>(schema_errors(schema(prefix(s.role) + ".request"), s.request).size());
      violations += static_cast<int>(schema_errors(schema(prefix(s.role) + ".response"), mocks.respond(s)).size());
      bodies += 2;
    }
    for (const auto& entry : fs::directory_iterator(source / "tests" / "fixtures" / "replay")) {
      std::ifstream in(entry.path());
      const json record = json::parse(in);
      const Role role = role_from_string(record["role"].get<std::string>());
      violations += static_cast<int>(schema_errors(schema(prefix(role) + ".request"), record["request"]).size());
      violations += static_cast<int>(schema_errors(schema(prefix(role) + ".response"), record["response"]).size());
      bodies += 2;
      if (role != Role::Inpaint) continue;
      const InpaintRequest req = parse_inpaint_request(record["request"]);
      const Image out = parse_inpaint_response(record["response"]);
      for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
          if (!req.mask(x, y))
            for (int c = 0; c < 3; ++c) identity_breaks += out.at(x, y, c) != req.image.at(x, y, c);
      ++inpaint_checked;
    }
    const bool ok = violations == 0 && identity_breaks == 0 && inpaint_checked > 0;
    return Outcome{ok, fmt("%.0f bodies, %.0f schema violations, %.0f inpaint fixtures, %.0f outside-mask changes",
                           bodies, violations, inpaint_checked, identity_breaks)};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
