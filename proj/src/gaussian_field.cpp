#include "splatscape/gaussian_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "splatscape/error.hpp"

namespace splatscape {

namespace {

// Zeroth-order spherical-harmonic constant used by 3DGS viewers to map f_dc to RGB.
constexpr double kShC0 = 0.28209479177387814;

const std::array<const char*, 14> kPlyProperties = {
    "x",       "y",       "z",       "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
    "scale_0", "scale_1", "scale_2", "rot_0",  "rot_1",  "rot_2",  "rot_3"};

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

GaussianField GaussianField::select(const std::vector<bool>& keep) const {
  GaussianField out;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (keep[i]) out.push_back(kernels[i], provenance[i]);
  }
  return out;
}

GaussianField lift_pixels(const CameraView& view, const RgbdFrame& frame,
                          const LiftOptions& options) {
  if (!frame.mask.any()) throw Error(ErrorCode::EmptyMask, "no valid pixel to lift");
  const double focal = view.mean_focal();
  const double opacity_logit = logit(options.opacity);
  GaussianField field;
  field.kernels.reserve(frame.mask.count());
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (!frame.mask(x, y)) continue;
      const double d = frame.depth.at(x, y);
      if (!(d > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "lifted pixel has no depth");
      GaussianKernel k;
      k.position = unproject(view, {static_cast<double>(x), static_cast<double>(y)}, d);
      k.color = {frame.rgb.at(x, y, 0), frame.rgb.at(x, y, 1), frame.rgb.at(x, y, 2)};
      k.opacity_logit = opacity_logit;
      k.log_scale.setConstant(std::log(d / (std::sqrt(2.0) * focal)));
      field.push_back(k, options.source_index);
    }
  }
  return field;
}

Mask filter_boundary(const RgbdFrame& frame, double ratio_threshold) {
  const int w = frame.width();
  const int h = frame.height();
  Mask keep = frame.mask;
  constexpr std::array<std::array<int, 2>, 4> kNeighbours{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!frame.mask(x, y)) continue;
      const double d = frame.depth.at(x, y);
      double worst = 0.0;
      for (const auto& [dx, dy] : kNeighbours) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || !frame.mask(nx, ny)) continue;
        worst = std::max(worst, std::abs(frame.depth.at(nx, ny) - d) / d);
      }
      if (worst > ratio_threshold) keep.set(x, y, false);
    }
  }
  return keep;
}

GaussianField filter_occlusion(const GaussianField& candidates,
                               const std::vector<DepthObservation>& prior_views,
                               double relative_tolerance) {
  std::vector<bool> keep(candidates.size(), true);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Eigen::Vector3d& p = candidates.kernels[i].position;
    for (const auto& prior : prior_views) {
      const Eigen::Vector3d pc = prior.view.pose.apply(p);
      if (!(pc.z() > 0.0)) continue;
      const double u = prior.view.fx * pc.x() / pc.z() + prior.view.cx;
      const double v = prior.view.fy * pc.y() / pc.z() + prior.view.cy;
      const long px = std::lround(u);
      const long py = std::lround(v);
      if (px < 0 || py < 0 || px >= prior.depth.width() || py >= prior.depth.height()) continue;
      const double recorded = prior.depth.at(static_cast<int>(px), static_cast<int>(py));
      if (!(recorded > 0.0)) continue;
      if (pc.z() < recorded * (1.0 - relative_tolerance)) {
        keep[i] = false;
        break;
      }
    }
  }
  return candidates.select(keep);
}

GaussianField merge(const GaussianField& base, const GaussianField& addition) {
  GaussianField out = base;
  out.kernels.insert(out.kernels.end(), addition.kernels.begin(), addition.kernels.end());
  out.provenance.insert(out.provenance.end(), addition.provenance.begin(),
                        addition.provenance.end());
  return out;
}

GaussianField split_by_provenance(const GaussianField& field, int source) {
  std::vector<bool> keep(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) keep[i] = field.provenance[i] == source;
  return field.select(keep);
}

std::vector<unsigned char> encode_ply(const GaussianField& field) {
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\nelement vertex " << field.size() << "\n";
  for (const char* name : kPlyProperties) header << "property float " << name << "\n";
  header << "end_header\n";
  const std::string head = header.str();

  std::vector<unsigned char> bytes(head.begin(), head.end());
  bytes.reserve(head.size() + field.size() * kPlyProperties.size() * sizeof(float));
  auto put = [&bytes](double value) {
    const float f = static_cast<float>(value);
    unsigned char raw[sizeof(float)];
    std::memcpy(raw, &f, sizeof(float));
    bytes.insert(bytes.end(), raw, raw + sizeof(float));
  };
  for (const auto& k : field.kernels) {
    for (int i = 0; i < 3; ++i) put(k.position[i]);
    for (int i = 0; i < 3; ++i) put((k.color[i] - 0.5) / kShC0);
    put(k.opacity_logit);
    for (int i = 0; i < 3; ++i) put(k.log_scale[i]);
    for (int i = 0; i < 4; ++i) put(k.rotation[i]);
  }
  return bytes;
}

GaussianField decode_ply(const std::vector<unsigned char>& bytes) {
  const std::string marker = "end_header\n";
  const std::string text(bytes.begin(), bytes.begin() + std::min<std::size_t>(bytes.size(), 4096));
  const auto end = text.find(marker);
  if (text.rfind("ply\n", 0) != 0 || end == std::string::npos) {
    throw Error(ErrorCode::IoError, "not a PLY file");
  }
  std::istringstream header(text.substr(0, end));
  std::string line;
  std::size_t count = 0;
  std::vector<std::string> properties;
  bool little_endian = false;
  while (std::getline(header, line)) {
    std::istringstream tokens(line);
    std::string word;
    tokens >> word;
    if (word == "format") {
      std::string fmt;
      tokens >> fmt;
      little_endian = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      tokens >> name >> count;
    } else if (word == "property") {
      std::string type, name;
      tokens >> type >> name;
      if (type != "float") throw Error(ErrorCode::IoError, "unsupported PLY property type " + type);
      properties.push_back(name);
    }
  }
  if (!little_endian) throw Error(ErrorCode::IoError, "only binary_little_endian PLY is supported");

  std::array<int, kPlyProperties.size()> column{};
  for (std::size_t i = 0; i < kPlyProperties.size(); ++i) {
    auto it = std::find(properties.begin(), properties.end(), kPlyProperties[i]);
    if (it == properties.end()) {
      throw Error(ErrorCode::IoError, std::string("PLY lacks property ") + kPlyProperties[i]);
    }
    column[i] = static_cast<int>(it - properties.begin());
  }

  const std::size_t offset = end + marker.size();
  const std::size_t stride = properties.size() * sizeof(float);
  if (bytes.size() < offset + count * stride) throw Error(ErrorCode::IoError, "truncated PLY body");

  GaussianField field;
  field.kernels.reserve(count);
  std::vector<float> row(properties.size());
  for (std::size_t n = 0; n < count; ++n) {
    std::memcpy(row.data(), bytes.data() + offset + n * stride, stride);
    auto get = [&](int i) { return static_cast<double>(row[static_cast<std::size_t>(column[i])]); };
    GaussianKernel k;
    k.position = {get(0), get(1), get(2)};
    k.color = {0.5 + kShC0 * get(3), 0.5 + kShC0 * get(4), 0.5 + kShC0 * get(5)};
    k.opacity_logit = get(6);
    k.log_scale = {get(7), get(8), get(9)};
    k.rotation = {get(10), get(11), get(12), get(13)};
    field.push_back(k, 0);
  }
  return field;
}

void write_ply(const GaussianField& field, const std::filesystem::path& path) {
  const auto bytes = encode_ply(field);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GaussianField read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ply(bytes);
}

}  // namespace splatscape
