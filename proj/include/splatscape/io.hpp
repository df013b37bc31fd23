#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "splatscape/image.hpp"

namespace splatscape {

using Bytes = std::vector<unsigned char>;

/// 8-bit PNG. Values are clamped to [0,1] and rounded; 1 channel is stored
/// as gray, 3 as RGB. Decoding always yields 3 channels for RGB/RGBA input
/// and 1 for gray.
Bytes encode_png(const Image& image);
Image decode_png(const Bytes& bytes);
void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

/// Portable float map: "Pf" (1 channel) or "PF" (3), little-endian float32
/// (scale -1), rows stored bottom to top.
Bytes encode_pfm(const Image& image);
Image decode_pfm(const Bytes& bytes);
void write_pfm(const Image& image, const std::filesystem::path& path);
Image read_pfm(const std::filesystem::path& path);

/// Single-channel PNG mask (255 = true).
Bytes encode_mask_png(const Mask& mask);
Mask decode_mask_png(const Bytes& bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace splatscape
