#include "splatscape/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "splatscape/error.hpp"

namespace splatscape {

namespace {

struct Splat {
  bool visible = false;
  Eigen::Vector3d cam = Eigen::Vector3d::Zero();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();  // kernel rotation (normalised)
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  Eigen::Matrix3d cov_cam = Eigen::Matrix3d::Zero();
  Eigen::Matrix<double, 2, 3> jac = Eigen::Matrix<double, 2, 3>::Zero();
  Eigen::Matrix2d conic = Eigen::Matrix2d::Zero();
  double opacity = 0.0;
  double extent_x = 0.0;
  double extent_y = 0.0;
};

// Per (tile, kernel) accumulator of gradients w.r.t. the projected quantities.
struct ScreenGrad {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double conic_a = 0.0;
  double conic_b = 0.0;
  double conic_c = 0.0;
  double opacity = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth = 0.0;

  ScreenGrad& operator+=(const ScreenGrad& o) {
    mean += o.mean;
    conic_a += o.conic_a;
    conic_b += o.conic_b;
    conic_c += o.conic_c;
    opacity += o.opacity;
    color += o.color;
    depth += o.depth;
    return *this;
  }
};

struct Footprint {
  double power_cut;
  double floor;  // exp(power_cut)
  double denom;  // numerator at power 0, so the centre weight is exactly 1

  explicit Footprint(double cutoff_sigma)
      : power_cut(-0.5 * cutoff_sigma * cutoff_sigma),
        floor(std::exp(power_cut)),
        denom(1.0 - floor - floor * (0.0 - power_cut)) {}

  // Gaussian minus its tangent at the cutoff: 1 at the centre, reaching 0
  // with zero slope at the cutoff ellipse, so the profile is C1 everywhere.
  bool eval(double power, double& weight, double& slope) const {
    if (!(power > power_cut)) return false;
    const double e = std::exp(power);
    weight = (e - floor - floor * (power - power_cut)) / denom;
    slope = (e - floor) / denom;
    return true;
  }
};

struct Bins {
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<int>> lists;
};

Splat project_kernel(const GaussianKernel& k, const CameraView& view,
                     const Eigen::Matrix3d& world_to_cam, const RenderSettings& settings) {
  Splat s;
  s.cam = world_to_cam * k.position + view.pose.translation;
  const double z = s.cam.z();
  if (!(z > settings.near_plane)) return s;

  s.rot = rotation_matrix(k.rotation);
  s.scale = k.scale();
  const Eigen::Matrix3d m = s.rot * s.scale.asDiagonal();
  s.cov_cam = world_to_cam * (m * m.transpose()) * world_to_cam.transpose();

  const double x = s.cam.x();
  const double y = s.cam.y();
  s.jac << view.fx / z, 0.0, -view.fx * x / (z * z), 0.0, view.fy / z, -view.fy * y / (z * z);
  Eigen::Matrix2d cov2 = s.jac * s.cov_cam * s.jac.transpose();
  cov2(0, 0) += settings.dilation;
  cov2(1, 1) += settings.dilation;
  cov2(0, 1) = cov2(1, 0) = 0.5 * (cov2(0, 1) + cov2(1, 0));
  const double det = cov2.determinant();
  if (!(det > 0.0)) return s;

  s.conic << cov2(1, 1) / det, -cov2(0, 1) / det, -cov2(1, 0) / det, cov2(0, 0) / det;
  s.mean = {view.fx * x / z + view.cx, view.fy * y / z + view.cy};
  s.opacity = k.opacity();
  s.extent_x = settings.cutoff_sigma * std::sqrt(cov2(0, 0));
  s.extent_y = settings.cutoff_sigma * std::sqrt(cov2(1, 1));
  s.visible = std::isfinite(s.mean.x()) && std::isfinite(s.mean.y());
  return s;
}

std::vector<Splat> project_all(const GaussianField& field, const CameraView& view,
                               const RenderSettings& settings) {
  const Eigen::Matrix3d world_to_cam = view.pose.rotation.toRotationMatrix();
  std::vector<Splat> splats(field.size());
  const auto n = static_cast<long>(field.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    splats[static_cast<std::size_t>(i)] =
        project_kernel(field.kernels[static_cast<std::size_t>(i)], view, world_to_cam, settings);
  }
  return splats;
}

Bins bin_splats(const std::vector<Splat>& splats, const CameraView& view,
                const RenderSettings& settings) {
  const int ts = settings.tile_size;
  Bins bins;
  bins.tiles_x = (view.width + ts - 1) / ts;
  bins.tiles_y = (view.height + ts - 1) / ts;
  bins.lists.resize(static_cast<std::size_t>(bins.tiles_x * bins.tiles_y));
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const Splat& s = splats[i];
    if (!s.visible) continue;
    const double x0 = std::max(0.0, std::floor(s.mean.x() - s.extent_x));
    const double x1 = std::min<double>(view.width - 1, std::ceil(s.mean.x() + s.extent_x));
    const double y0 = std::max(0.0, std::floor(s.mean.y() - s.extent_y));
    const double y1 = std::min<double>(view.height - 1, std::ceil(s.mean.y() + s.extent_y));
    if (x0 > x1 || y0 > y1) continue;
    const int tx0 = static_cast<int>(x0) / ts;
    const int tx1 = static_cast<int>(x1) / ts;
    const int ty0 = static_cast<int>(y0) / ts;
    const int ty1 = static_cast<int>(y1) / ts;
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        bins.lists[static_cast<std::size_t>(ty * bins.tiles_x + tx)].push_back(static_cast<int>(i));
  }
  // Front to back; indices were pushed in ascending order, so a stable sort
  // breaks depth ties by kernel index.
  for (auto& list : bins.lists) {
    std::stable_sort(list.begin(), list.end(),
                     [&](int a, int b) { return splats[a].cam.z() < splats[b].cam.z(); });
  }
  return bins;
}

inline double quad_power(const Splat& s, double dx, double dy) {
  return -0.5 * (s.conic(0, 0) * dx * dx + 2.0 * s.conic(0, 1) * dx * dy + s.conic(1, 1) * dy * dy);
}

void check_upstream(const Image& img, const CameraView& view, int channels, const char* what) {
  if (img.empty()) return;
  if (img.width() != view.width || img.height() != view.height || img.channels() != channels) {
    throw Error(ErrorCode::ShapeMismatch, std::string("upstream ") + what + " has the wrong shape");
  }
}

}  // namespace

Eigen::Matrix3d rotation_matrix(const Eigen::Vector4d& quaternion) {
  const Eigen::Vector4d q = quaternion.normalized();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

FieldGradients::FieldGradients(std::size_t n)
    : position(n, Eigen::Vector3d::Zero()),
      color(n, Eigen::Vector3d::Zero()),
      opacity_logit(n, 0.0),
      log_scale(n, Eigen::Vector3d::Zero()),
      rotation(n, Eigen::Vector4d::Zero()) {}

bool FieldGradients::all_zero() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (!position[i].isZero(0.0) || !color[i].isZero(0.0) || opacity_logit[i] != 0.0 ||
        !log_scale[i].isZero(0.0) || !rotation[i].isZero(0.0)) {
      return false;
    }
  }
  return true;
}

RenderOutput render(const GaussianField& field, const CameraView& view,
                    const RenderSettings& settings) {
  RenderOutput out{Image(view.width, view.height, 3), Image(view.width, view.height, 1),
                   Image(view.width, view.height, 1)};
  const auto splats = project_all(field, view, settings);
  const Bins bins = bin_splats(splats, view, settings);
  const Footprint fp(settings.cutoff_sigma);
  const int ts = settings.tile_size;
  const int tile_count = bins.tiles_x * bins.tiles_y;

#pragma omp parallel for schedule(dynamic)
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& list = bins.lists[static_cast<std::size_t>(tile)];
    const int px0 = (tile % bins.tiles_x) * ts;
    const int py0 = (tile / bins.tiles_x) * ts;
    for (int py = py0; py < std::min(py0 + ts, view.height); ++py) {
      for (int px = px0; px < std::min(px0 + ts, view.width); ++px) {
        double transmittance = 1.0;
        Eigen::Vector3d color = Eigen::Vector3d::Zero();
        double depth = 0.0;
        for (int idx : list) {
          const Splat& s = splats[static_cast<std::size_t>(idx)];
          double weight, slope;
          if (!fp.eval(quad_power(s, px - s.mean.x(), py - s.mean.y()), weight, slope)) continue;
          const double alpha = s.opacity * weight;
          const double w = alpha * transmittance;
          color += w * field.kernels[static_cast<std::size_t>(idx)].color;
          depth += w * s.cam.z();
          transmittance *= 1.0 - alpha;
        }
        const double acc = 1.0 - transmittance;
        for (int c = 0; c < 3; ++c)
          out.rgb.at(px, py, c) = color[c] + transmittance * settings.background[c];
        out.alpha.at(px, py) = acc;
        out.depth.at(px, py) = depth / std::max(acc, settings.depth_alpha_floor);
      }
    }
  }
  return out;
}

FieldGradients render_backward(const GaussianField& field, const CameraView& view,
                               const RenderUpstream& upstream, const RenderSettings& settings) {
  check_upstream(upstream.rgb, view, 3, "rgb");
  check_upstream(upstream.depth, view, 1, "depth");
  check_upstream(upstream.alpha, view, 1, "alpha");

  FieldGradients grads(field.size());
  const auto splats = project_all(field, view, settings);
  const Bins bins = bin_splats(splats, view, settings);
  const Footprint fp(settings.cutoff_sigma);
  const int ts = settings.tile_size;
  const int tile_count = bins.tiles_x * bins.tiles_y;
  std::vector<std::vector<ScreenGrad>> tile_grads(static_cast<std::size_t>(tile_count));

  struct Hit {
    int slot;
    double alpha, weight, slope, transmittance, dx, dy;
  };

#pragma omp parallel for schedule(dynamic)
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& list = bins.lists[static_cast<std::size_t>(tile)];
    auto& acc = tile_grads[static_cast<std::size_t>(tile)];
    acc.assign(list.size(), ScreenGrad{});
    if (list.empty()) continue;
    std::vector<Hit> hits;
    hits.reserve(list.size());
    const int px0 = (tile % bins.tiles_x) * ts;
    const int py0 = (tile / bins.tiles_x) * ts;
    for (int py = py0; py < std::min(py0 + ts, view.height); ++py) {
      for (int px = px0; px < std::min(px0 + ts, view.width); ++px) {
        const Eigen::Vector3d g_rgb =
            upstream.rgb.empty()
                ? Eigen::Vector3d::Zero()
                : Eigen::Vector3d(upstream.rgb.at(px, py, 0), upstream.rgb.at(px, py, 1),
                                  upstream.rgb.at(px, py, 2));
        const double g_depth = upstream.depth.empty() ? 0.0 : upstream.depth.at(px, py);
        double g_alpha = upstream.alpha.empty() ? 0.0 : upstream.alpha.at(px, py);
        if (g_rgb.isZero(0.0) && g_depth == 0.0 && g_alpha == 0.0) continue;

        // Replay the forward pass for this pixel.
        hits.clear();
        double transmittance = 1.0;
        double depth_raw = 0.0;
        for (std::size_t slot = 0; slot < list.size(); ++slot) {
          const Splat& s = splats[static_cast<std::size_t>(list[slot])];
          const double dx = px - s.mean.x();
          const double dy = py - s.mean.y();
          double weight, slope;
          if (!fp.eval(quad_power(s, dx, dy), weight, slope)) continue;
          const double alpha = s.opacity * weight;
          hits.push_back({static_cast<int>(slot), alpha, weight, slope, transmittance, dx, dy});
          depth_raw += alpha * transmittance * s.cam.z();
          transmittance *= 1.0 - alpha;
        }
        const double accumulated = 1.0 - transmittance;
        // depth = depth_raw / max(accumulated, floor).
        const double norm = std::max(accumulated, settings.depth_alpha_floor);
        const double g_depth_raw = g_depth / norm;
        if (accumulated > settings.depth_alpha_floor) g_alpha -= g_depth * depth_raw / (norm * norm);

        // Back to front: `behind_*` is the composite of everything behind the
        // current kernel (background included), as seen through it.
        Eigen::Vector3d behind_rgb = settings.background;
        double behind_alpha = 0.0;
        double behind_depth = 0.0;
        for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
          const int idx = list[static_cast<std::size_t>(it->slot)];
          const Splat& s = splats[static_cast<std::size_t>(idx)];
          const Eigen::Vector3d& c = field.kernels[static_cast<std::size_t>(idx)].color;
          const double t = it->transmittance;
          const double a = it->alpha;
          const double z = s.cam.z();

          const double d_alpha = t * (g_rgb.dot(c - behind_rgb) + g_alpha * (1.0 - behind_alpha) +
                                      g_depth_raw * (z - behind_depth));
          ScreenGrad& g = acc[static_cast<std::size_t>(it->slot)];
          g.color += a * t * g_rgb;
          g.depth += a * t * g_depth_raw;
          g.opacity += d_alpha * it->weight;
          const double d_power = d_alpha * s.opacity * it->slope;
          g.mean.x() += d_power * (s.conic(0, 0) * it->dx + s.conic(0, 1) * it->dy);
          g.mean.y() += d_power * (s.conic(0, 1) * it->dx + s.conic(1, 1) * it->dy);
          g.conic_a += d_power * (-0.5 * it->dx * it->dx);
          g.conic_b += d_power * (-it->dx * it->dy);
          g.conic_c += d_power * (-0.5 * it->dy * it->dy);

          behind_rgb = a * c + (1.0 - a) * behind_rgb;
          behind_alpha = a + (1.0 - a) * behind_alpha;
          behind_depth = a * z + (1.0 - a) * behind_depth;
        }
      }
    }
  }

  // Fixed tile order keeps the reduction bit-reproducible.
  std::vector<ScreenGrad> screen(field.size());
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& list = bins.lists[static_cast<std::size_t>(tile)];
    const auto& acc = tile_grads[static_cast<std::size_t>(tile)];
    for (std::size_t slot = 0; slot < list.size(); ++slot)
      screen[static_cast<std::size_t>(list[slot])] += acc[slot];
  }

  const Eigen::Matrix3d world_to_cam = view.pose.rotation.toRotationMatrix();
  const auto n = static_cast<long>(field.size());
#pragma omp parallel for schedule(static)
  for (long li = 0; li < n; ++li) {
    const auto i = static_cast<std::size_t>(li);
    const Splat& s = splats[i];
    if (!s.visible) continue;
    const ScreenGrad& g = screen[i];
    const GaussianKernel& k = field.kernels[i];

    grads.color[i] = g.color;
    grads.opacity_logit[i] = g.opacity * s.opacity * (1.0 - s.opacity);

    // conic = inverse(cov2): dL/dcov2 = -Q G Q with G the symmetric gradient.
    Eigen::Matrix2d g_conic;
    g_conic << g.conic_a, 0.5 * g.conic_b, 0.5 * g.conic_b, g.conic_c;
    const Eigen::Matrix2d g_cov2 = -s.conic * g_conic * s.conic;

    // cov2 = J cov_cam J^T + dilation.
    const Eigen::Matrix3d g_cov_cam = s.jac.transpose() * g_cov2 * s.jac;
    const Eigen::Matrix<double, 2, 3> g_jac = 2.0 * g_cov2 * s.jac * s.cov_cam;

    // cov_cam = W (M M^T) W^T with M = R S.
    const Eigen::Matrix3d g_cov_world = world_to_cam.transpose() * g_cov_cam * world_to_cam;
    const Eigen::Matrix3d m = s.rot * s.scale.asDiagonal();
    const Eigen::Matrix3d g_m = 2.0 * g_cov_world * m;
    Eigen::Matrix3d g_rot;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) g_rot(r, c) = g_m(r, c) * s.scale[c];
    for (int c = 0; c < 3; ++c)
      grads.log_scale[i][c] = g_m.col(c).dot(s.rot.col(c)) * s.scale[c];

    const Eigen::Vector4d qn = k.rotation.normalized();
    const double w = qn[0], x = qn[1], y = qn[2], z = qn[3];
    const Eigen::Matrix3d& G = g_rot;
    Eigen::Vector4d g_qn;
    g_qn[0] = 2.0 * (-z * G(0, 1) + y * G(0, 2) + z * G(1, 0) - x * G(1, 2) - y * G(2, 0) +
                     x * G(2, 1));
    g_qn[1] = 2.0 * (y * G(0, 1) + z * G(0, 2) + y * G(1, 0) - 2.0 * x * G(1, 1) - w * G(1, 2) +
                     z * G(2, 0) + w * G(2, 1) - 2.0 * x * G(2, 2));
    g_qn[2] = 2.0 * (-2.0 * y * G(0, 0) + x * G(0, 1) + w * G(0, 2) + x * G(1, 0) + z * G(1, 2) -
                     w * G(2, 0) + z * G(2, 1) - 2.0 * y * G(2, 2));
    g_qn[3] = 2.0 * (-2.0 * z * G(0, 0) - w * G(0, 1) + x * G(0, 2) + w * G(1, 0) -
                     2.0 * z * G(1, 1) + y * G(1, 2) + x * G(2, 0) + y * G(2, 1));
    const double qnorm = k.rotation.norm();
    grads.rotation[i] = (g_qn - qn * qn.dot(g_qn)) / qnorm;

    // Camera-space centre through the mean, the Jacobian and the depth.
    const double cx = s.cam.x(), cy = s.cam.y(), cz = s.cam.z();
    const double fx = view.fx, fy = view.fy;
    Eigen::Vector3d g_cam = Eigen::Vector3d::Zero();
    g_cam.x() += g.mean.x() * fx / cz;
    g_cam.z() += -g.mean.x() * fx * cx / (cz * cz);
    g_cam.y() += g.mean.y() * fy / cz;
    g_cam.z() += -g.mean.y() * fy * cy / (cz * cz);
    g_cam.z() += g_jac(0, 0) * (-fx / (cz * cz));
    g_cam.x() += g_jac(0, 2) * (-fx / (cz * cz));
    g_cam.z() += g_jac(0, 2) * (2.0 * fx * cx / (cz * cz * cz));
    g_cam.z() += g_jac(1, 1) * (-fy / (cz * cz));
    g_cam.y() += g_jac(1, 2) * (-fy / (cz * cz));
    g_cam.z() += g_jac(1, 2) * (2.0 * fy * cy / (cz * cz * cz));
    g_cam.z() += g.depth;
    grads.position[i] = world_to_cam.transpose() * g_cam;
  }
  return grads;
}

}  // namespace splatscape
