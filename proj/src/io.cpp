#include "splatscape/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "splatscape/error.hpp"

namespace splatscape {

namespace {

unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

Bytes encode_8bit(const std::vector<unsigned char>& pixels, int width, int height, bool rgb) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw Error(ErrorCode::IoError, std::string("png sizing failed: ") + image.message);
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw Error(ErrorCode::IoError, std::string("png encoding failed: ") + image.message);
  out.resize(size);
  return out;
}

struct Decoded {
  std::vector<unsigned char> pixels;
  int width = 0;
  int height = 0;
  int channels = 0;
};

Decoded decode_8bit(const Bytes& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(ErrorCode::ProtocolError, std::string("png decoding failed: ") + image.message);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Decoded d;
  d.width = static_cast<int>(image.width);
  d.height = static_cast<int>(image.height);
  d.channels = color ? 3 : 1;
  d.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, d.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::ProtocolError, std::string("png decoding failed: ") + image.message);
  }
  return d;
}

}  // namespace

Bytes encode_png(const Image& image) {
  if (image.channels() != 1 && image.channels() != 3)
    throw Error(ErrorCode::ShapeMismatch, "png needs 1 or 3 channels");
  std::vector<unsigned char> pixels(image.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = quantize(image.values()[i]);
  return encode_8bit(pixels, image.width(), image.height(), image.channels() == 3);
}

Image decode_png(const Bytes& bytes) {
  const Decoded d = decode_8bit(bytes);
  Image out(d.width, d.height, d.channels);
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = d.pixels[i] / 255.0;
  return out;
}

Bytes encode_mask_png(const Mask& mask) {
  std::vector<unsigned char> pixels(static_cast<std::size_t>(mask.width()) * mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) pixels[mask.index(x, y)] = mask(x, y) ? 255 : 0;
  return encode_8bit(pixels, mask.width(), mask.height(), false);
}

Mask decode_mask_png(const Bytes& bytes) {
  const Decoded d = decode_8bit(bytes);
  Mask out(d.width, d.height);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      // First channel at or above mid-gray marks the pixel.
      const std::size_t base = (static_cast<std::size_t>(y) * d.width + x) * d.channels;
      out.set(x, y, d.pixels[base] >= 128);
    }
  return out;
}

Bytes encode_pfm(const Image& image) {
  if (image.channels() != 1 && image.channels() != 3)
    throw Error(ErrorCode::ShapeMismatch, "pfm needs 1 or 3 channels");
  std::ostringstream header;
  header << (image.channels() == 1 ? "Pf" : "PF") << '\n'
         << image.width() << ' ' << image.height() << '\n'
         << "-1.0\n";
  const std::string h = header.str();
  Bytes out(h.begin(), h.end());
  out.reserve(out.size() + image.size() * 4);
  for (int y = image.height() - 1; y >= 0; --y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < image.channels(); ++c) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(image.at(x, y, c)));
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
      }
  return out;
}

Image decode_pfm(const Bytes& bytes) {
  // Three whitespace-terminated header tokens followed by exactly one
  // whitespace byte before the raster.
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    return std::string(bytes.begin() + static_cast<long>(start), bytes.begin() + static_cast<long>(pos));
  };
  const std::string magic = token();
  if (magic != "Pf" && magic != "PF") throw Error(ErrorCode::ProtocolError, "not a PFM stream");
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::ProtocolError, "malformed PFM header");
  }
  ++pos;
  const int channels = magic == "Pf" ? 1 : 3;
  if (width <= 0 || height <= 0 || scale == 0.0) throw Error(ErrorCode::ProtocolError, "malformed PFM header");
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < pos + 4 * count) throw Error(ErrorCode::ProtocolError, "truncated PFM raster");
  const bool little = scale < 0.0;
  Image out(width, height, channels);
  for (int y = height - 1; y >= 0; --y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
          const std::uint32_t byte = bytes[pos + static_cast<std::size_t>(b)];
          bits |= little ? byte << (8 * b) : byte << (8 * (3 - b));
        }
        pos += 4;
        out.at(x, y, c) = std::bit_cast<float>(bits);
      }
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

void write_png(const Image& image, const std::filesystem::path& path) { write_file(path, encode_png(image)); }
Image read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }
void write_pfm(const Image& image, const std::filesystem::path& path) { write_file(path, encode_pfm(image)); }
Image read_pfm(const std::filesystem::path& path) { return decode_pfm(read_file(path)); }

}  // namespace splatscape
