#pragma once

#include <string>
#include <vector>

#include "mmcyto/image.hpp"

namespace mmcyto {

/// Baseline little-endian TIFF, one uncompressed 32-bit float page per
/// plane. The ImageDescription tag holds {"pixel_size_um": v}.
std::string encode_tiff(const std::vector<Plane>& pages);

/// Reads uncompressed strip-organized TIFF (either byte order) with 8/16-bit
/// unsigned, 32-bit unsigned or 32-bit float samples, one sample per pixel.
/// Integer samples are scaled to [0, 1]. Throws Parse on anything else.
std::vector<Plane> decode_tiff(const std::string& bytes);

void write_tiff(const std::string& path, const std::vector<Plane>& pages);
std::vector<Plane> read_tiff(const std::string& path);

}  // namespace mmcyto
