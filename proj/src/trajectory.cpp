#include "splatscape/trajectory.hpp"

#include <cmath>
#include <fstream>

#include "splatscape/error.hpp"
#include "splatscape/warp.hpp"

namespace splatscape {

Trajectory spiral(const CameraView& base, const SpiralParams& params) {
  if (params.samples < 1) throw Error(ErrorCode::InvalidRange, "spiral needs at least one sample");
  if (!(params.focus_depth > 0.0)) throw Error(ErrorCode::InvalidRange, "focus depth must be positive");
  if (!(params.turns > 0.0)) throw Error(ErrorCode::InvalidRange, "turns must be positive");

  Trajectory out;
  out.params = params;
  out.views.reserve(static_cast<std::size_t>(params.samples));
  out.views.push_back(base);

  const Eigen::Matrix3d rb = base.pose.rotation.toRotationMatrix();
  const Eigen::Vector3d target(0.0, 0.0, params.focus_depth);
  for (int i = 1; i < params.samples; ++i) {
    const double theta = 2.0 * M_PI * params.turns * i / params.samples;
    const double envelope = std::sin(theta / (2.0 * params.turns));
    const double rho = params.radius * envelope;
    const Eigen::Vector3d center(rho * std::cos(theta), rho * std::sin(theta), params.forward * envelope);

    const Eigen::Vector3d f = (target - center).normalized();
    const Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(f).normalized();
    const Eigen::Vector3d y = f.cross(x);
    Eigen::Matrix3d rel;
    rel.row(0) = x.transpose();
    rel.row(1) = y.transpose();
    rel.row(2) = f.transpose();

    CameraView v = base;
    v.pose.rotation = Eigen::Quaterniond(rel * rb).normalized();
    v.pose.translation = rel * (base.pose.translation - center);
    out.views.push_back(v);
  }
  return out;
}

std::size_t hole_count(const GaussianField& field, const CameraView& view, double alpha_threshold) {
  const RgbdFrame partial = render_partial(field, view, alpha_threshold);
  return partial.mask.inverted().count();
}

std::size_t select_next(const GaussianField& field, const Trajectory& candidates,
                        const std::vector<bool>& processed, double alpha_threshold) {
  const std::size_t n = candidates.views.size();
  std::vector<long> holes(n, -1);
  // Candidates are independent; the argmax below runs in index order.
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (k < processed.size() && processed[k]) continue;
    holes[k] = static_cast<long>(hole_count(field, candidates.views[k], alpha_threshold));
  }
  long best = -1;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (holes[i] > best) {
      best = holes[i];
      best_index = i;
    }
  if (best < 0) throw Error(ErrorCode::Exhausted, "every candidate view has been processed");
  return best_index;
}

nlohmann::json to_json(const CameraView& view) {
  const auto& q = view.pose.rotation;
  const auto& t = view.pose.translation;
  return {{"width", view.width},
          {"height", view.height},
          {"fx", view.fx},
          {"fy", view.fy},
          {"cx", view.cx},
          {"cy", view.cy},
          {"rotation", {q.w(), q.x(), q.y(), q.z()}},
          {"translation", {t.x(), t.y(), t.z()}}};
}

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ConfigInvalid, std::string("missing key '") + key + "'");
  return j.at(key);
}

}  // namespace

CameraView camera_from_json(const nlohmann::json& j) {
  try {
    CameraView v;
    v.width = field(j, "width").get<int>();
    v.height = field(j, "height").get<int>();
    v.fx = field(j, "fx").get<double>();
    v.fy = field(j, "fy").get<double>();
    v.cx = field(j, "cx").get<double>();
    v.cy = field(j, "cy").get<double>();
    const auto q = field(j, "rotation").get<std::vector<double>>();
    const auto t = field(j, "translation").get<std::vector<double>>();
    if (q.size() != 4 || t.size() != 3) throw Error(ErrorCode::ConfigInvalid, "rotation needs 4 and translation 3 values");
    v.pose.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    v.pose.translation = {t[0], t[1], t[2]};
    v.validate();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("camera record: ") + e.what());
  }
}

nlohmann::json to_json(const Trajectory& trajectory) {
  nlohmann::json views = nlohmann::json::array();
  for (const auto& v : trajectory.views) views.push_back(to_json(v));
  const auto& p = trajectory.params;
  return {{"params",
           {{"radius", p.radius},
            {"forward", p.forward},
            {"turns", p.turns},
            {"samples", p.samples},
            {"focus_depth", p.focus_depth}}},
          {"views", views}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory out;
  try {
    if (j.contains("params")) {
      const auto& p = j.at("params");
      out.params.radius = p.value("radius", 0.0);
      out.params.forward = p.value("forward", 0.0);
      out.params.turns = p.value("turns", 1.0);
      out.params.samples = p.value("samples", 1);
      out.params.focus_depth = p.value("focus_depth", 1.0);
    }
    for (const auto& v : field(j, "views")) out.views.push_back(camera_from_json(v));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("trajectory: ") + e.what());
  }
  if (out.views.empty()) throw Error(ErrorCode::ConfigInvalid, "trajectory has no views");
  return out;
}

void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  os << to_json(trajectory).dump(2) << '\n';
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  return trajectory_from_json(j);
}

}  // namespace splatscape
