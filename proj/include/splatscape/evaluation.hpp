#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "splatscape/adapters/backends.hpp"
#include "splatscape/image.hpp"

namespace splatscape {

struct IqaAspect {
  std::string_view name;
  std::string_view question;
};

/// The five judged aspects and their exact questions.
const std::array<IqaAspect, 5>& iqa_aspects();

struct IqaScores {
  /// Fraction of "yes" answers per aspect, in iqa_aspects() order.
  std::array<double, 5> yes_fraction{};
  int views = 0;
  /// Answers that were neither yes nor no; each counts as "no".
  int unparseable = 0;
};

/// Indices of `n` renders spread evenly over `available` frames; every frame
/// once when fewer are available.
std::vector<std::size_t> sample_indices(std::size_t available, std::size_t n);

using IqaLog = std::function<void(const std::string&)>;

/// Asks every aspect's question about each sampled render. Adapter errors
/// propagate; UnparseableAnswer is logged and scored as "no".
IqaScores llava_iqa(const std::vector<Image>& renders, const TextBackend& judge, int n_views = 50,
                    const IqaLog& log = {});
/// Same over the frame_*.png files of a render directory (IoError if none).
IqaScores llava_iqa(const std::filesystem::path& render_dir, const TextBackend& judge, int n_views = 50,
                    const IqaLog& log = {});

/// frame_*.png paths in lexicographic order.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& render_dir);

}  // namespace splatscape
