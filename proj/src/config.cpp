#include "splatscape/config.hpp"

#include <fstream>
#include <sstream>

#include "splatscape/adapters/codec.hpp"
#include "splatscape/error.hpp"

namespace splatscape {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, "config key '" + key + "' " + what);
}

/// Typed access that reports the full dotted key on failure.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  const json& at(const std::string& key) const {
    if (!node_.contains(key)) invalid(join(key), "is missing");
    return node_.at(key);
  }
  Reader child(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_object()) invalid(join(key), "must be an object");
    return Reader(v, join(key));
  }
  bool has(const std::string& key) const { return node_.contains(key); }

  double number(const std::string& key, double lo, double hi, bool open_lo = false) const {
    const json& v = at(key);
    if (!v.is_number()) invalid(join(key), "must be a number");
    const double x = v.get<double>();
    if (!(open_lo ? x > lo : x >= lo) || !(x <= hi))
      invalid(join(key), "must lie in " + std::string(open_lo ? "(" : "[") + fmt(lo) + ", " + fmt(hi) + "]");
    return x;
  }
  int integer(const std::string& key, long long lo, long long hi) const {
    const json& v = at(key);
    if (!v.is_number_integer()) invalid(join(key), "must be an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi) invalid(join(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
  }
  std::uint64_t seed(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      invalid(join(key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) invalid(join(key), "must be a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_boolean()) invalid(join(key), "must be a boolean");
    return v.get<bool>();
  }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  static std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }
  const json& node_;
  std::string path_;
};

/// Rejects keys of `given` that `schema` (the defaults tree) does not know.
void check_known(const json& given, const json& schema, const std::string& path) {
  for (const auto& [key, value] : given.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) invalid(full, "is not a known setting");
    const json& expected = schema.at(key);
    // Endpoints accept either a url string or an object; both are checked later.
    if (path == "endpoints") continue;
    if (expected.is_object() && value.is_object()) check_known(value, expected, full);
  }
}

EndpointConfig read_endpoint(const Reader& endpoints, const std::string& role) {
  const json& v = endpoints.at(role);
  EndpointConfig e;
  if (v.is_string()) {
    e.url = v.get<std::string>();
  } else if (v.is_object()) {
    const Reader r(v, endpoints.join(role));
    for (const auto& [key, _] : v.items())
      if (key != "url" && key != "timeout" && key != "retries") invalid(r.join(key), "is not a known setting");
    e.url = r.string("url");
    if (r.has("timeout")) e.timeout = r.number("timeout", 0.0, 1e6, true);
    if (r.has("retries")) e.retries = r.integer("retries", 0, 100);
  } else {
    invalid(endpoints.join(role), "must be \"mock\", a url, or an object with a url");
  }
  if (!e.is_mock()) {
    try {
      ModelEndpoint(role_from_string(role), e.url, e.timeout, e.retries);
    } catch (const Error& err) {
      invalid(endpoints.join(role), std::string("is not a usable endpoint: ") + err.what());
    }
  }
  return e;
}

}  // namespace

json default_config() {
  const McsConfig mcs;
  const OptimizerConfig opt;
  return {
      {"preset", ""},
      {"debug_dir", ""},
      {"width", 512},
      {"height", 512},
      {"endpoints", {{"inpaint", "mock"}, {"depth", "mock"}, {"caption", "mock"}, {"vqa", "mock"}}},
      {"mock",
       {{"inpaint_sigma", 0.02},
        {"caption", MockConfig().caption},
        {"vqa_metric", "laplacian_variance"},
        {"vqa_threshold", 1e-3}}},
      {"optimizer",
       {{"lr_position", opt.lr_position},
        {"lr_color", opt.lr_color},
        {"lr_scale", opt.lr_scale},
        {"lr_opacity", opt.lr_opacity},
        {"lr_rotation", opt.lr_rotation},
        {"lambda_dssim", opt.lambda_dssim}}},
      {"scaffold", {{"border_fraction", 0.2}, {"optimize_steps", 100}}},
      {"coarse",
       {{"rounds", 6},
        {"candidates", 12},
        {"radius_fraction", 0.05},
        {"forward_fraction", 0.1},
        {"focus_fraction", 1.0},
        {"turns", 1.0},
        {"alpha_threshold", 0.5},
        {"boundary_ratio", 0.1},
        {"occlusion_tolerance", 0.02},
        {"smoothing_band", 16},
        {"optimize_steps", 256}}},
      {"refine",
       {{"n_views", mcs.n_views},
        {"t_start", mcs.t_start},
        {"w", mcs.w},
        {"fit_steps", mcs.fit_steps},
        {"resolution", mcs.resolution},
        {"lr_position", mcs.lr_position},
        {"rectify_in_eps", mcs.rectify_in_eps},
        {"stochastic", mcs.stochastic},
        {"schedule_steps", 50},
        {"steps", 2560},
        {"denoiser",
         {{"kind", "perturbed"}, {"magnitude", 1.0}, {"bias_seed", 0}, {"blur_gain", 2.0}, {"blur_radius", 3}}}}},
      {"render", {{"frames", 50}}},
      {"eval", {{"n_views", 50}}},
  };
}

json preset_overrides(const std::string& name) {
  if (name.empty()) return json::object();
  if (name == "desk")
    return {{"width", 64},
            {"height", 64},
            {"refine", {{"n_views", 4}, {"fit_steps", 160}, {"resolution", 64}, {"steps", 160}}}};
  invalid("preset", "names an unknown preset '" + name + "'");
}

void merge_config(json& base, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) merge_config(base[key], value);
    else base[key] = value;
  }
}

PipelineConfig resolve_config(const json& file, const json& flags) {
  if (!file.is_object()) throw Error(ErrorCode::ConfigInvalid, "config file must hold a JSON object");
  json known = default_config();
  known["seed"] = 0;
  known["input"] = "";
  known["output_dir"] = "";
  check_known(file, known, "");
  check_known(flags, known, "");

  std::string preset;
  for (const json* layer : {&file, &flags})
    if (layer->contains("preset")) {
      if (!(*layer)["preset"].is_string()) invalid("preset", "must be a string");
      preset = (*layer)["preset"].get<std::string>();
    }
  json merged = default_config();
  merge_config(merged, preset_overrides(preset));
  merge_config(merged, file);
  merge_config(merged, flags);

  const Reader r(merged, "");
  PipelineConfig c;
  c.seed = r.seed("seed");
  c.input = r.string("input");
  if (c.input.empty()) invalid("input", "must not be empty");
  c.output_dir = r.string("output_dir");
  if (c.output_dir.empty()) invalid("output_dir", "must not be empty");
  c.debug_dir = r.string("debug_dir");
  c.preset = r.string("preset");
  c.width = r.integer("width", 8, 8192);
  c.height = r.integer("height", 8, 8192);

  const Reader ep = r.child("endpoints");
  for (const auto& [key, _] : merged["endpoints"].items()) c.endpoints[role_from_string(key)] = read_endpoint(ep, key);

  const Reader mock = r.child("mock");
  c.mock.inpaint_sigma = mock.number("inpaint_sigma", 0.0, 1.0);
  c.mock.caption = mock.string("caption");
  c.mock.vqa_metric = mock.string("vqa_metric");
  if (c.mock.vqa_metric != "laplacian_variance" && c.mock.vqa_metric != "stddev" && c.mock.vqa_metric != "mean")
    invalid("mock.vqa_metric", "must be laplacian_variance, stddev or mean");
  c.mock.vqa_threshold = mock.number("vqa_threshold", -1e9, 1e9);

  const Reader opt = r.child("optimizer");
  c.optimizer.lr_position = opt.number("lr_position", 0.0, 10.0);
  c.optimizer.lr_color = opt.number("lr_color", 0.0, 10.0);
  c.optimizer.lr_scale = opt.number("lr_scale", 0.0, 10.0);
  c.optimizer.lr_opacity = opt.number("lr_opacity", 0.0, 10.0);
  c.optimizer.lr_rotation = opt.number("lr_rotation", 0.0, 10.0);
  c.optimizer.lambda_dssim = opt.number("lambda_dssim", 0.0, 1.0);

  const Reader sc = r.child("scaffold");
  c.scaffold.border_fraction = sc.number("border_fraction", 0.0, 1.0);
  c.scaffold.optimize_steps = sc.integer("optimize_steps", 0, 1000000);

  const Reader co = r.child("coarse");
  c.coarse.candidates = co.integer("candidates", 2, 10000);
  c.coarse.rounds = co.integer("rounds", 0, c.coarse.candidates - 1);
  c.coarse.radius_fraction = co.number("radius_fraction", 0.0, 10.0);
  c.coarse.forward_fraction = co.number("forward_fraction", -10.0, 10.0);
  c.coarse.focus_fraction = co.number("focus_fraction", 0.0, 100.0, true);
  c.coarse.turns = co.number("turns", 0.0, 100.0, true);
  c.coarse.alpha_threshold = co.number("alpha_threshold", 0.0, 1.0, true);
  c.coarse.boundary_ratio = co.number("boundary_ratio", 0.0, 100.0, true);
  c.coarse.occlusion_tolerance = co.number("occlusion_tolerance", 0.0, 1.0);
  c.coarse.smoothing_band = co.integer("smoothing_band", 0, 100000);
  c.coarse.optimize_steps = co.integer("optimize_steps", 0, 1000000);

  const Reader re = r.child("refine");
  McsConfig& m = c.refine.mcs;
  m.n_views = re.integer("n_views", 1, 1000);
  c.refine.schedule_steps = re.integer("schedule_steps", 1, 10000);
  m.t_start = re.integer("t_start", 1, c.refine.schedule_steps);
  const json& w = re.at("w");
  if (w.is_array()) {
    if (static_cast<int>(w.size()) != m.t_start) invalid("refine.w", "must list one weight per step t = 1..t_start");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w[i].is_number()) invalid("refine.w", "entries must be numbers");
      const double x = w[i].get<double>();
      if (!(x >= 0.0 && x <= 1.0)) invalid("refine.w", "entries must lie in [0, 1]");
      m.w_schedule.push_back(x);
    }
  } else {
    m.w = re.number("w", 0.0, 1.0);
  }
  m.fit_steps = re.integer("fit_steps", 0, 10000000);
  m.resolution = re.integer("resolution", 1, 100000);
  m.lr_position = re.number("lr_position", 0.0, 10.0);
  m.rectify_in_eps = re.boolean("rectify_in_eps");
  m.stochastic = re.boolean("stochastic");
  c.refine.steps = re.integer("steps", 0, 10000000);
  const Reader dn = re.child("denoiser");
  c.refine.denoiser.kind = dn.string("kind");
  if (c.refine.denoiser.kind != "oracle" && c.refine.denoiser.kind != "perturbed" &&
      c.refine.denoiser.kind != "structured")
    invalid("refine.denoiser.kind", "must be oracle, perturbed or structured");
  c.refine.denoiser.magnitude = dn.number("magnitude", 0.0, 1e6);
  c.refine.denoiser.bias_seed = dn.seed("bias_seed");
  c.refine.denoiser.blur_gain = dn.number("blur_gain", 0.0, 1e6);
  c.refine.denoiser.blur_radius = dn.integer("blur_radius", 0, 10000);

  c.render_frames = r.child("render").integer("frames", 1, 100000);
  c.eval_views = r.child("eval").integer("n_views", 1, 100000);
  c.resolved = merged;
  return c;
}

std::string PipelineConfig::hash() const {
  json j = resolved;
  j.erase("output_dir");
  j.erase("debug_dir");
  return sha256_hex(j.dump());
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& path, const json& flags) {
  json file = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config file " + path->string());
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigInvalid, "config file " + path->string() + " is not valid JSON: " + e.what());
    }
  }
  return resolve_config(file, flags);
}

}  // namespace splatscape
