#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "splatscape/adapters/protocol.hpp"
#include "splatscape/mcs.hpp"
#include "splatscape/optimize.hpp"

namespace splatscape {

inline constexpr const char* kSplatscapeVersion = "0.1.0";
inline constexpr int kProtocolVersion = 1;

/// An endpoint url of "mock" selects the built-in deterministic backend.
struct EndpointConfig {
  std::string url = "mock";
  double timeout = 60.0;
  int retries = 3;
  bool is_mock() const { return url == "mock"; }
};

struct MockConfig {
  double inpaint_sigma = 0.02;
  std::string caption = "a quiet study with a striped wall, a wooden floor and two glossy spheres";
  std::string vqa_metric = "laplacian_variance";
  double vqa_threshold = 1e-3;
};

struct ScaffoldConfig {
  double border_fraction = 0.2;
  int optimize_steps = 100;
};

struct CoarseConfig {
  int rounds = 6;
  /// Spiral samples considered by select_next; sample 0 is the input view.
  int candidates = 12;
  /// Spiral radius, forward travel and look-at depth, as fractions of the
  /// scaffold's median depth.
  double radius_fraction = 0.05;
  double forward_fraction = 0.1;
  double focus_fraction = 1.0;
  double turns = 1.0;
  double alpha_threshold = 0.5;
  double boundary_ratio = 0.1;
  double occlusion_tolerance = 0.02;
  int smoothing_band = 16;
  int optimize_steps = 256;
};

/// Stand-in for a pretrained diffusion model: an oracle-family denoiser whose
/// targets are the coarse field's own renders.
struct DenoiserConfig {
  std::string kind = "perturbed";  // oracle | perturbed | structured
  double magnitude = 1.0;
  std::uint64_t bias_seed = 0;
  double blur_gain = 2.0;
  int blur_radius = 3;
};

struct RefineConfig {
  McsConfig mcs;
  int schedule_steps = 50;
  int steps = 2560;
  DenoiserConfig denoiser;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  /// "synthetic:desk" or a PNG path.
  std::string input;
  std::filesystem::path output_dir;
  std::filesystem::path debug_dir;
  std::string preset;
  /// Size of the synthetic input; PNG inputs keep their own size.
  int width = 512;
  int height = 512;
  std::map<Role, EndpointConfig> endpoints;
  MockConfig mock;
  OptimizerConfig optimizer;
  ScaffoldConfig scaffold;
  CoarseConfig coarse;
  RefineConfig refine;
  int render_frames = 50;
  int eval_views = 50;

  /// The merged JSON this was read from, with every default filled in.
  nlohmann::json resolved;

  /// sha256 of `resolved` minus output_dir and debug_dir, which cannot
  /// change any artifact.
  std::string hash() const;
};

/// Every key with its default value. seed, input and output_dir have none and
/// must be supplied.
nlohmann::json default_config();
/// Overrides applied by a named preset ("desk"); ConfigInvalid if unknown.
nlohmann::json preset_overrides(const std::string& name);

/// Recursively overlays `patch` onto `base`; objects merge, everything else
/// replaces.
void merge_config(nlohmann::json& base, const nlohmann::json& patch);

/// Layers defaults, the preset named by the file or flags, the file, and the
/// flags (in that order), then validates. ConfigInvalid names the offending
/// key path for unknown, missing, mistyped, or out-of-range values.
PipelineConfig resolve_config(const nlohmann::json& file, const nlohmann::json& flags);

PipelineConfig load_config(const std::optional<std::filesystem::path>& path, const nlohmann::json& flags);

}  // namespace splatscape
