#include "anoco/png.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>

namespace anoco {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& body) {
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), body.begin(), body.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png_gray8(const std::uint8_t* pixels, Index rows, Index cols) {
  require(rows >= 1 && cols >= 1, ErrorCode::ShapeMismatch, "PNG needs a non-empty image");
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(rows * (cols + 1)));
  for (Index y = 0; y < rows; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), pixels + y * cols, pixels + (y + 1) * cols);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  require(compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) == Z_OK,
          ErrorCode::IoFailure, "zlib compression failed");
  packed.resize(packed_size);

  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> header;
  put_u32(header, static_cast<std::uint32_t>(cols));
  put_u32(header, static_cast<std::uint32_t>(rows));
  header.insert(header.end(), {8, 0, 0, 0, 0});  // depth 8, grayscale, deflate, no filter, no interlace
  put_chunk(out, "IHDR", header);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

MapBounds write_map_png(const std::filesystem::path& path, const ImageMap& map) {
  require(map.size() > 0, ErrorCode::ShapeMismatch, "cannot write an empty map");
  MapBounds bounds{map.minCoeff(), map.maxCoeff()};
  const double span = bounds.max - bounds.min;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(map.size()), 0);
  if (span > 0.0) {
    for (Index i = 0; i < map.size(); ++i) {
      pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (map.data()[i] - bounds.min) / span));
    }
  }
  const auto bytes = encode_png_gray8(pixels.data(), map.rows(), map.cols());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), ErrorCode::IoFailure, "cannot open " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(f), ErrorCode::IoFailure, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::IoFailure, "rename to " + path.string() + " failed: " + ec.message());
  return bounds;
}

}  // namespace anoco
