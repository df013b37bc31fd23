// splatscape: single-image scene reconstruction pipeline.
//
//   splatscape --config run.json --stage all
//   splatscape --preset desk --seed 0 --stage all   (with "input"/"output_dir" in the config or flags)
//   splatscape serve --port 8080                    (mock backends over the wire protocol)
//
// Exit codes: 0 success, 2 configuration error, 3 adapter failure, 1 other.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "splatscape/adapters/http.hpp"
#include "splatscape/error.hpp"
#include "splatscape/pipeline.hpp"

namespace {

using namespace splatscape;
using nlohmann::json;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAdapter = 3;

ModelServer* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

int serve(int port, const PipelineConfig& config) {
  const MockInpaint inpaint(config.seed, config.mock.inpaint_sigma);
  const MockDepth depth;
  const MockCaption caption(config.mock.caption);
  const MockVqa vqa(config.mock.vqa_metric, config.mock.vqa_threshold);
  ModelServer server({&inpaint, &depth, &caption, &vqa}, port);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cout << "serving mock models on " << server.url() << std::endl;
  server.wait();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-image 3D scene reconstruction"};
  std::string config_path, stage_name = "all", preset, debug_dir, input, output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> views, t_start;
  std::optional<double> w;
  std::map<std::string, std::string> endpoints;

  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--stage", stage_name, "scaffold | coarse | refine | render | eval | all");
  app.add_option("--seed", seed, "seed");
  app.add_option("--preset", preset, "preset (desk)");
  app.add_option("--debug-dir", debug_dir, "debug_dir: per-step MCS dumps");
  app.add_option("--input", input, "input: PNG path or synthetic:desk");
  app.add_option("--output-dir", output_dir, "output_dir");
  app.add_option("--views", views, "refine.n_views");
  app.add_option("--t-start", t_start, "refine.t_start");
  app.add_option("--w", w, "refine.w");
  for (const char* role : {"inpaint", "depth", "caption", "vqa"})
    app.add_option(std::string("--endpoint.") + role, endpoints[role], std::string("endpoints.") + role + ": url or mock");

  CLI::App* serve_cmd = app.add_subcommand("serve", "serve the mock models over HTTP");
  int port = 8080;
  serve_cmd->add_option("--port", port, "port (0 picks one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  json flags = json::object();
  if (seed) flags["seed"] = *seed;
  if (!preset.empty()) flags["preset"] = preset;
  if (!debug_dir.empty()) flags["debug_dir"] = debug_dir;
  if (!input.empty()) flags["input"] = input;
  if (!output_dir.empty()) flags["output_dir"] = output_dir;
  if (views) flags["refine"]["n_views"] = *views;
  if (t_start) flags["refine"]["t_start"] = *t_start;
  if (w) flags["refine"]["w"] = *w;
  for (const auto& [role, url] : endpoints)
    if (!url.empty()) flags["endpoints"][role] = url;

  try {
    if (*serve_cmd) {
      // Serving needs no run: fill the required keys when absent.
      for (const char* key : {"input", "output_dir"})
        if (!flags.contains(key)) flags[key] = "unused";
      if (!flags.contains("seed")) flags["seed"] = 0;
      return serve(port, load_config(config_path.empty() ? std::nullopt : std::optional(config_path), flags));
    }
    const PipelineConfig config =
        load_config(config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path), flags);
    const Stage stage = stage_from_string(stage_name);
    run_pipeline(config, stage, [](const std::string& line) { std::clog << line << '\n'; });
    return 0;
  } catch (const Error& e) {
    std::cerr << "splatscape: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::ConfigInvalid: return kExitConfig;
      case ErrorCode::AdapterFailure:
      case ErrorCode::EndpointUnavailable:
      case ErrorCode::ProtocolError:
      case ErrorCode::Timeout: return kExitAdapter;
      default: return kExitOther;
    }
  } catch (const std::exception& e) {
    std::cerr << "splatscape: " << e.what() << '\n';
    return kExitOther;
  }
}
