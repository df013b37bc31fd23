#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "splatscape/adapters/backends.hpp"
#include "splatscape/config.hpp"

namespace splatscape {

enum class Stage { Scaffold, Coarse, Refine, Render, Eval, All };

std::string_view to_string(Stage stage);
/// ConfigInvalid for unknown names.
Stage stage_from_string(std::string_view name);

/// The four model roles, each either a mock or an HTTP client per the config.
class ModelSet {
 public:
  explicit ModelSet(const PipelineConfig& config);
  ModelSet(std::unique_ptr<InpaintBackend> inpaint, std::unique_ptr<DepthBackend> depth,
           std::unique_ptr<TextBackend> caption, std::unique_ptr<TextBackend> vqa);
  ~ModelSet();
  ModelSet(const ModelSet&) = delete;
  ModelSet& operator=(const ModelSet&) = delete;

  const InpaintBackend& inpaint() const { return *inpaint_; }
  const DepthBackend& depth() const { return *depth_; }
  const TextBackend& caption() const { return *caption_; }
  const TextBackend& vqa() const { return *vqa_; }
  /// Null unless the depth role is mocked.
  MockDepth* mock_depth() { return mock_depth_; }

 private:
  std::unique_ptr<InpaintBackend> inpaint_;
  std::unique_ptr<DepthBackend> depth_;
  std::unique_ptr<TextBackend> caption_;
  std::unique_ptr<TextBackend> vqa_;
  MockDepth* mock_depth_ = nullptr;
};

using PipelineLog = std::function<void(const std::string&)>;

/// Runs one stage (or all of them in order) under config.output_dir. Each
/// stage reads its inputs from the files earlier stages wrote, so a staged
/// run and an `all` run produce the same bytes. After every stage
/// manifest.json is rewritten with the config hash, seed, versions and the
/// sha256 of every artifact; it holds no timestamps or absolute paths.
///
/// Adapter errors surface as AdapterFailure naming the stage and view index.
void run_pipeline(const PipelineConfig& config, Stage stage, const PipelineLog& log = {});
/// Same with caller-supplied models (tests inject failing backends).
void run_pipeline(const PipelineConfig& config, Stage stage, ModelSet& models, const PipelineLog& log = {});

}  // namespace splatscape
