#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "anoco/types.hpp"

namespace anoco {

/// 8-bit grayscale PNG, one IDAT chunk, no filtering.
std::vector<std::uint8_t> encode_png_gray8(const std::uint8_t* pixels, Index rows, Index cols);

struct MapBounds {
  double min = 0.0;
  double max = 0.0;
};

/// Min-max normalizes the map to 0..255 and writes it as PNG (temp + rename).
/// A constant map is written as all zeros. Returns the bounds used.
MapBounds write_map_png(const std::filesystem::path& path, const ImageMap& map);

}  // namespace anoco
