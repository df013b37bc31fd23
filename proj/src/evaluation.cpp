#include "splatscape/evaluation.hpp"

#include <algorithm>

#include "splatscape/error.hpp"
#include "splatscape/io.hpp"

namespace splatscape {

const std::array<IqaAspect, 5>& iqa_aspects() {
  static const std::array<IqaAspect, 5> aspects = {{
      {"noise_free", "Is the image free of noise or distortion"},
      {"edge", "Does the image show clear objects and sharp edges"},
      {"structure", "Is the overall scene coherent and realistic in terms of layout and proportions in this image"},
      {"detail", "Does this image show detailed textures and materials"},
      {"quality",
       "Is this image overall a high-quality image with clear objects, sharp edges, nice color, good overall "
       "structure, and good visual quality"},
  }};
  return aspects;
}

std::vector<std::size_t> sample_indices(std::size_t available, std::size_t n) {
  std::vector<std::size_t> out;
  if (available <= n) {
    for (std::size_t i = 0; i < available; ++i) out.push_back(i);
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out.push_back(i * available / n);
  return out;
}

IqaScores llava_iqa(const std::vector<Image>& renders, const TextBackend& judge, int n_views, const IqaLog& log) {
  if (renders.empty()) throw Error(ErrorCode::InvalidRange, "no renders to judge");
  if (n_views < 1) throw Error(ErrorCode::InvalidRange, "n_views must be positive");
  const std::vector<std::size_t> picked = sample_indices(renders.size(), static_cast<std::size_t>(n_views));
  IqaScores scores;
  scores.views = static_cast<int>(picked.size());
  const auto& aspects = iqa_aspects();
  for (std::size_t a = 0; a < aspects.size(); ++a) {
    int yes = 0;
    for (std::size_t i : picked) {
      try {
        if (vqa_yes_no(judge, renders[i], aspects[a].question)) ++yes;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnparseableAnswer) throw;
        ++scores.unparseable;
        if (log) log("view " + std::to_string(i) + ", " + std::string(aspects[a].name) + ": " + e.what());
      }
    }
    scores.yes_fraction[a] = static_cast<double>(yes) / static_cast<double>(picked.size());
  }
  return scores;
}

std::vector<std::filesystem::path> list_frames(const std::filesystem::path& render_dir) {
  std::vector<std::filesystem::path> frames;
  if (!std::filesystem::is_directory(render_dir)) return frames;
  for (const auto& entry : std::filesystem::directory_iterator(render_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("frame_", 0) == 0 && entry.path().extension() == ".png") frames.push_back(entry.path());
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

IqaScores llava_iqa(const std::filesystem::path& render_dir, const TextBackend& judge, int n_views,
                    const IqaLog& log) {
  const std::vector<std::filesystem::path> frames = list_frames(render_dir);
  if (frames.empty()) throw Error(ErrorCode::IoError, "no frame_*.png renders in " + render_dir.string());
  std::vector<Image> renders;
  renders.reserve(frames.size());
  for (const auto& f : frames) renders.push_back(read_png(f));
  return llava_iqa(renders, judge, n_views, log);
}

}  // namespace splatscape
