#include "splatscape/pipeline.hpp"

#include <algorithm>
#include <map>

#include "splatscape/adapters/codec.hpp"
#include "splatscape/adapters/http.hpp"
#include "splatscape/diffusion.hpp"
#include "splatscape/error.hpp"
#include "splatscape/evaluation.hpp"
#include "splatscape/io.hpp"
#include "splatscape/metrics.hpp"
#include "splatscape/synthetic.hpp"
#include "splatscape/trajectory.hpp"
#include "splatscape/warp.hpp"

namespace splatscape {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kSyntheticDesk = "synthetic:desk";

bool is_adapter_error(ErrorCode code) {
  return code == ErrorCode::EndpointUnavailable || code == ErrorCode::ProtocolError || code == ErrorCode::Timeout ||
         code == ErrorCode::UnparseableAnswer || code == ErrorCode::AdapterFailure;
}

/// Runs an adapter call, relabelling its failures with stage and view.
template <class F>
auto adapter_call(Stage stage, int view, F&& call) {
  try {
    return call();
  } catch (const Error& e) {
    if (!is_adapter_error(e.code())) throw;
    throw Error(ErrorCode::AdapterFailure,
                "stage " + std::string(to_string(stage)) + ", view " + std::to_string(view) + ": " + e.what());
  }
}

std::string two_digits(int i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

std::string three_digits(int i) {
  std::string s = std::to_string(i);
  while (s.size() < 3) s = "0" + s;
  return s;
}

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "missing " + path.string() + "; run the earlier stages first");
  const Bytes bytes = read_file(path);
  return json::parse(bytes.begin(), bytes.end());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

Mask positive(const Image& depth) {
  Mask m(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) m.set(x, y, depth.at(x, y) > 0.0);
  return m;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

/// Everything later stages need from the scaffold.
struct Scaffold {
  CameraView input_view;
  CameraView zoomed_view;
  std::string prompt;
  double median_depth = 1.0;
  OptimizationTarget zoomed;  // inpainted canvas, estimated depth, all pixels valid
};

Scaffold load_scaffold(const fs::path& out) {
  const json state = read_json(out / "scaffold" / "state.json");
  Scaffold s;
  s.input_view = camera_from_json(state.at("input_view"));
  s.zoomed_view = camera_from_json(state.at("zoomed_view"));
  s.prompt = state.at("prompt").get<std::string>();
  s.median_depth = state.at("median_depth").get<double>();
  RgbdFrame frame(s.zoomed_view.width, s.zoomed_view.height);
  frame.rgb = read_png(out / "scaffold" / "zoomed.png");
  frame.depth = read_pfm(out / "scaffold" / "zoomed_depth.pfm");
  frame.mask = Mask(frame.width(), frame.height(), true);
  s.zoomed = {s.zoomed_view, std::move(frame)};
  return s;
}

Trajectory make_spiral(const PipelineConfig& c, const Scaffold& s, int samples) {
  SpiralParams p;
  p.radius = c.coarse.radius_fraction * s.median_depth;
  p.forward = c.coarse.forward_fraction * s.median_depth;
  p.focus_depth = c.coarse.focus_fraction * s.median_depth;
  p.turns = c.coarse.turns;
  p.samples = samples;
  return spiral(s.input_view, p);
}

OptimizerConfig optimizer_for(const PipelineConfig& c, int steps, std::uint64_t salt) {
  OptimizerConfig o = c.optimizer;
  o.steps = steps;
  o.seed = c.seed * 1000003ULL + salt;
  return o;
}

class Runner {
 public:
  Runner(const PipelineConfig& config, ModelSet& models, const PipelineLog& log)
      : c_(config), models_(models), log_(log), out_(config.output_dir) {}

  void run(Stage stage) {
    switch (stage) {
      case Stage::Scaffold: scaffold(); break;
      case Stage::Coarse: coarse(); break;
      case Stage::Refine: refine(); break;
      case Stage::Render: render_frames(); break;
      case Stage::Eval: evaluate(); break;
      case Stage::All:
        for (Stage s : {Stage::Scaffold, Stage::Coarse, Stage::Refine, Stage::Render, Stage::Eval}) run(s);
        return;
    }
    record(stage);
  }

 private:
  void say(Stage stage, const std::string& message) const {
    if (log_) log_("[" + std::string(to_string(stage)) + "] " + message);
  }

  void scaffold() {
    const fs::path dir = out_ / "scaffold";
    fs::create_directories(dir);
    CameraView view;
    Image input;
    if (c_.input == kSyntheticDesk) {
      view = synthetic_view(c_.width, c_.height);
      const RgbdFrame truth = render_synthetic(view);
      input = truth.rgb;
      if (MockDepth* mock = models_.mock_depth()) mock->register_frame(truth.rgb, truth.depth, view.fx);
    } else {
      input = read_png(c_.input);
      view = default_camera(input.width(), input.height());
    }

    RgbdFrame frame(input.width(), input.height());
    frame.rgb = input;
    frame.depth = Image(input.width(), input.height(), 1, 1.0);  // replaced by the estimate below
    frame.mask = Mask(input.width(), input.height(), true);
    ZoomedOut z = zoom_out(view, frame, c_.scaffold.border_fraction);
    say(Stage::Scaffold, "zoomed out to " + std::to_string(z.view.width) + "x" + std::to_string(z.view.height));

    std::string prompt = adapter_call(Stage::Scaffold, 0, [&] { return caption(models_.caption(), input); });
    if (prompt.empty()) say(Stage::Scaffold, "warning: empty caption, inpainting without a prompt");
    const Image filled = adapter_call(Stage::Scaffold, 0, [&] {
      return inpaint(models_.inpaint(), z.frame.rgb, z.frame.mask.inverted(), prompt);
    });
    const DepthEstimate est =
        adapter_call(Stage::Scaffold, 0, [&] { return estimate_depth(models_.depth(), filled, z.view.fx); });
    // Zooming out keeps the focal length, so an estimate on the canvas applies
    // to the input camera as well.
    z.view.fx = z.view.fy = *est.focal;
    view.fx = view.fy = *est.focal;

    RgbdFrame canvas(z.view.width, z.view.height);
    canvas.rgb = filled;
    canvas.depth = est.depth;
    canvas.mask = Mask(z.view.width, z.view.height, true);
    RgbdFrame lifted = canvas;
    lifted.mask = filter_boundary(canvas, c_.coarse.boundary_ratio);
    GaussianField field = lift_pixels(z.view, lifted, {0.8, 0});
    say(Stage::Scaffold, std::to_string(field.size()) + " kernels lifted");
    field = optimize(field, {{z.view, canvas}}, optimizer_for(c_, c_.scaffold.optimize_steps, 0));

    write_png(input, dir / "input.png");
    write_png(filled, dir / "zoomed.png");
    write_pfm(est.depth, dir / "zoomed_depth.pfm");
    write_ply(field, dir / "field.ply");
    write_json(dir / "state.json", {{"input_view", to_json(view)},
                                    {"zoomed_view", to_json(z.view)},
                                    {"prompt", prompt},
                                    {"median_depth", median({est.depth.values().begin(), est.depth.values().end()})}});
  }

  void coarse() {
    const fs::path dir = out_ / "coarse";
    fs::create_directories(dir);
    const Scaffold s = load_scaffold(out_);
    GaussianField field = read_ply(out_ / "scaffold" / "field.ply");
    const Trajectory candidates = make_spiral(c_, s, c_.coarse.candidates);
    std::vector<bool> processed(candidates.views.size(), false);
    processed[0] = true;  // the input view is covered by the scaffold

    std::vector<OptimizationTarget> targets = {s.zoomed};
    std::vector<DepthObservation> observed = {{s.zoomed_view, s.zoomed.frame.depth}};
    json order = json::array();
    for (int round = 1; round <= c_.coarse.rounds; ++round) {
      const std::size_t idx = select_next(field, candidates, processed, c_.coarse.alpha_threshold);
      processed[idx] = true;
      const CameraView& view = candidates.views[idx];
      const int vi = static_cast<int>(idx);
      const RgbdFrame partial = render_partial(field, view, c_.coarse.alpha_threshold);
      const Mask holes = partial.mask.inverted();
      const Image filled = adapter_call(Stage::Coarse, vi, [&] {
        return inpaint(models_.inpaint(), partial.rgb, holes, s.prompt);
      });
      const DepthEstimate est =
          adapter_call(Stage::Coarse, vi, [&] { return estimate_depth(models_.depth(), filled, view.fx); });
      const DepthAlignment aligned = align_depth(est.depth, partial, c_.coarse.smoothing_band);

      RgbdFrame frame(view.width, view.height);
      frame.rgb = filled;
      frame.depth = aligned.depth;
      frame.mask = Mask(view.width, view.height, true);
      RgbdFrame lifted = frame;
      lifted.mask = filter_boundary(frame, c_.coarse.boundary_ratio) & holes;
      GaussianField added;
      if (lifted.mask.any()) added = lift_pixels(view, lifted, {0.8, round});
      const std::size_t lifted_count = added.size();
      if (lifted_count > 0) {
        added = filter_occlusion(added, observed, c_.coarse.occlusion_tolerance);
        field = merge(field, added);
      }
      say(Stage::Coarse, "round " + std::to_string(round) + ": view " + std::to_string(idx) + ", " +
                             std::to_string(holes.count()) + " hole pixels, " + std::to_string(added.size()) + "/" +
                             std::to_string(lifted_count) + " kernels kept");

      observed.push_back({view, frame.depth});
      targets.push_back({view, frame});
      field = optimize(field, targets, optimizer_for(c_, c_.coarse.optimize_steps, static_cast<std::uint64_t>(round)));

      const std::string name = "view_" + two_digits(round);
      write_png(filled, dir / (name + ".png"));
      write_pfm(frame.depth, dir / (name + "_depth.pfm"));
      order.push_back({{"round", round},
                       {"candidate", idx},
                       {"hole_pixels", holes.count()},
                       {"scale", aligned.scale},
                       {"shift", aligned.shift}});
    }
    write_trajectory(candidates, dir / "candidates.json");
    write_json(dir / "rounds.json", order);
    write_ply(field, dir / "field.ply");
  }

  void refine() {
    const fs::path dir = out_ / "refine";
    fs::create_directories(dir);
    const Scaffold s = load_scaffold(out_);
    const GaussianField field = read_ply(out_ / "coarse" / "field.ply");
    const McsConfig& mc = c_.refine.mcs;
    const Trajectory views = make_spiral(c_, s, mc.n_views);
    const DiffusionSchedule schedule = make_schedule(c_.refine.schedule_steps);

    std::vector<Image> targets;
    for (const CameraView& v : views.views) targets.push_back(to_model_range(render(field, v).rgb));
    const DenoiserConfig& dc = c_.refine.denoiser;
    std::unique_ptr<Denoiser> denoiser;
    if (dc.kind == "oracle") {
      denoiser = std::make_unique<OracleDenoiser>(schedule, targets);
    } else {
      auto biases = smooth_bias_fields(mc.n_views, s.input_view.width, s.input_view.height, dc.bias_seed);
      if (dc.kind == "perturbed")
        denoiser = std::make_unique<PerturbedOracle>(schedule, targets, std::move(biases), dc.magnitude);
      else
        denoiser = std::make_unique<StructuredBiasOracle>(schedule, targets, std::move(biases), dc.magnitude,
                                                          dc.blur_gain, dc.blur_radius);
    }

    McsConfig config = mc;
    if (!c_.debug_dir.empty()) config.debug_dir = c_.debug_dir / "mcs";
    const McsResult result = mcs_sample(field, views.views, *denoiser, schedule, config, c_.seed);
    say(Stage::Refine, "sampled " + std::to_string(result.images.size()) + " views from t = " +
                           std::to_string(mc.t_start) + " with " +
                           std::to_string(config.effective_fit_steps(s.input_view.width, s.input_view.height)) +
                           " fit steps per step");
    const GaussianField refined = refine_field(field, views.views, result.images, s.zoomed, c_.refine.steps, c_.seed);

    for (std::size_t n = 0; n < result.images.size(); ++n) {
      write_png(result.initial[n], dir / ("initial_" + two_digits(static_cast<int>(n)) + ".png"));
      write_png(result.images[n], dir / ("mcs_" + two_digits(static_cast<int>(n)) + ".png"));
    }
    write_trajectory(views, dir / "views.json");
    write_ply(refined, dir / "field.ply");
  }

  void render_frames() {
    const fs::path dir = out_ / "render";
    fs::create_directories(dir);
    const Scaffold s = load_scaffold(out_);
    const GaussianField field = read_ply(out_ / "refine" / "field.ply");
    const Trajectory path = make_spiral(c_, s, c_.render_frames);
    for (std::size_t i = 0; i < path.views.size(); ++i) {
      const RenderOutput r = render(field, path.views[i]);
      const std::string name = three_digits(static_cast<int>(i));
      write_png(r.rgb, dir / ("frame_" + name + ".png"));
      write_pfm(r.depth, dir / ("depth_" + name + ".pfm"));
    }
    write_trajectory(path, dir / "trajectory.json");
    say(Stage::Render, std::to_string(path.views.size()) + " frames");
  }

  void evaluate() {
    const fs::path dir = out_ / "eval";
    fs::create_directories(dir);
    const fs::path renders = out_ / "render";
    const Trajectory path = read_trajectory(renders / "trajectory.json");
    const auto frames = list_frames(renders);
    if (frames.size() != path.views.size())
      throw Error(ErrorCode::IoError, "render directory does not match its trajectory");

    const IqaScores iqa = adapter_call(Stage::Eval, -1, [&] {
      return llava_iqa(renders, models_.vqa(), c_.eval_views, [&](const std::string& m) {
        say(Stage::Eval, "unparseable answer counted as no: " + m);
      });
    });

    std::vector<RgbdFrame> loaded;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      RgbdFrame f;
      f.rgb = read_png(frames[i]);
      f.depth = read_pfm(renders / ("depth_" + three_digits(static_cast<int>(i)) + ".pfm"));
      f.mask = positive(f.depth);
      loaded.push_back(std::move(f));
    }
    std::vector<ViewPair> pairs;
    for (std::size_t i = 0; i + 1 < loaded.size(); ++i) {
      pairs.emplace_back(i, i + 1);
      pairs.emplace_back(i + 1, i);
    }
    json result = json::object();
    json scores = json::object();
    for (std::size_t a = 0; a < iqa_aspects().size(); ++a)
      scores[std::string(iqa_aspects()[a].name)] = iqa.yes_fraction[a];
    result["llava_iqa"] = {{"scores", scores}, {"views", iqa.views}, {"unparseable", iqa.unparseable}};
    result["consistency"] = pairs.empty() ? json(nullptr) : json(consistency_metric(path.views, loaded, pairs));
    // Frame 0 sits at the input camera.
    const Image input = read_png(out_ / "scaffold" / "input.png");
    result["input_psnr"] = psnr(loaded[0].rgb, input, Mask(input.width(), input.height(), true));
    write_json(dir / "metrics.json", result);
    say(Stage::Eval, result.dump());
  }

  /// Rewrites manifest.json with the hashes of every file under the stage's
  /// directory.
  void record(Stage stage) {
    const fs::path manifest_path = out_ / "manifest.json";
    json manifest;
    if (fs::exists(manifest_path)) {
      manifest = read_json(manifest_path);
      if (manifest.value("config_hash", "") != c_.hash()) manifest = json();
    }
    manifest["config_hash"] = c_.hash();
    manifest["seed"] = c_.seed;
    manifest["input"] = c_.input;
    manifest["preset"] = c_.preset;
    manifest["versions"] = {{"splatscape", kSplatscapeVersion}, {"protocol", kProtocolVersion}};
    const std::string name(to_string(stage));
    json outputs = json::object();
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(out_ / name))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) outputs[fs::relative(f, out_).generic_string()] = sha256_hex(read_file(f));
    manifest["stages"][name] = outputs;
    write_json(manifest_path, manifest);
  }

  const PipelineConfig& c_;
  ModelSet& models_;
  const PipelineLog& log_;
  fs::path out_;
};

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Scaffold: return "scaffold";
    case Stage::Coarse: return "coarse";
    case Stage::Refine: return "refine";
    case Stage::Render: return "render";
    case Stage::Eval: return "eval";
    case Stage::All: return "all";
  }
  return "?";
}

Stage stage_from_string(std::string_view name) {
  for (Stage s : {Stage::Scaffold, Stage::Coarse, Stage::Refine, Stage::Render, Stage::Eval, Stage::All})
    if (to_string(s) == name) return s;
  throw Error(ErrorCode::ConfigInvalid, "unknown stage '" + std::string(name) + "'");
}

ModelSet::ModelSet(const PipelineConfig& config) {
  auto client = [&](Role role) {
    const EndpointConfig& e = config.endpoints.at(role);
    RetryPolicy policy;
    policy.seed = config.seed;
    return HttpClient(ModelEndpoint(role, e.url, e.timeout, e.retries), policy);
  };
  auto mocked = [&](Role role) { return config.endpoints.at(role).is_mock(); };

  if (mocked(Role::Inpaint)) inpaint_ = std::make_unique<MockInpaint>(config.seed, config.mock.inpaint_sigma);
  else inpaint_ = std::make_unique<HttpInpaint>(client(Role::Inpaint));
  if (mocked(Role::Depth)) {
    auto mock = std::make_unique<MockDepth>();
    mock_depth_ = mock.get();
    depth_ = std::move(mock);
  } else {
    depth_ = std::make_unique<HttpDepth>(client(Role::Depth));
  }
  if (mocked(Role::Caption)) caption_ = std::make_unique<MockCaption>(config.mock.caption);
  else caption_ = std::make_unique<HttpText>(client(Role::Caption));
  if (mocked(Role::Vqa)) vqa_ = std::make_unique<MockVqa>(config.mock.vqa_metric, config.mock.vqa_threshold);
  else vqa_ = std::make_unique<HttpText>(client(Role::Vqa));
}

ModelSet::ModelSet(std::unique_ptr<InpaintBackend> inpaint, std::unique_ptr<DepthBackend> depth,
                   std::unique_ptr<TextBackend> caption, std::unique_ptr<TextBackend> vqa)
    : inpaint_(std::move(inpaint)), depth_(std::move(depth)), caption_(std::move(caption)), vqa_(std::move(vqa)) {}

ModelSet::~ModelSet() = default;

void run_pipeline(const PipelineConfig& config, Stage stage, ModelSet& models, const PipelineLog& log) {
  Runner(config, models, log).run(stage);
}

void run_pipeline(const PipelineConfig& config, Stage stage, const PipelineLog& log) {
  ModelSet models(config);
  run_pipeline(config, stage, models, log);
}

}  // namespace splatscape
