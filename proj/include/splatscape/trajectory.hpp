#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "splatscape/gaussian_field.hpp"
#include "splatscape/geometry.hpp"

namespace splatscape {

struct SpiralParams {
  double radius = 0.0;   // metres
  double forward = 0.0;  // metres along the base optical axis
  double turns = 1.0;
  int samples = 1;
  double focus_depth = 1.0;  // look-at point on the base optical axis
};

struct Trajectory {
  std::vector<CameraView> views;
  SpiralParams params;
};

/// Counter-clockwise spiral around the base optical axis. At angle
/// theta = 2*pi*turns*i/n the centre sits at (rho cos theta, rho sin theta, z)
/// in the base camera frame, with rho = radius*sin(theta / (2 turns)) and
/// z = forward*sin(theta / (2 turns)): the path leaves the base view, widens
/// to `radius` halfway and closes back in. Every view looks at
/// (0, 0, focus_depth). Sample 0 is the base view.
Trajectory spiral(const CameraView& base, const SpiralParams& params);

/// Index of the unprocessed candidate whose partial render has the most hole
/// pixels (lowest index on ties). Throws Exhausted when none remain.
std::size_t select_next(const GaussianField& field, const Trajectory& candidates,
                        const std::vector<bool>& processed, double alpha_threshold = 0.5);

/// Number of pixels below the alpha threshold, the quantity select_next ranks.
std::size_t hole_count(const GaussianField& field, const CameraView& view, double alpha_threshold = 0.5);

nlohmann::json to_json(const CameraView& view);
CameraView camera_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& j);

void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);
Trajectory read_trajectory(const std::filesystem::path& path);

}  // namespace splatscape
