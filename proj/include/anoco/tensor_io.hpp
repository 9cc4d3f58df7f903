#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "anoco/types.hpp"

namespace anoco {

/// Element type codes of the .anof container.
enum class DType : std::uint8_t { F32 = 0, U8 = 1 };

/// In-memory form of a .anof file: "ANOF" | u32 version | u8 dtype | u8 ndim |
/// u64 dims[ndim] | row-major payload. Everything little-endian.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> values;

  DType dtype() const { return values.index() == 0 ? DType::F32 : DType::U8; }
  std::uint64_t numel() const;

  const std::vector<float>& f32() const;
  const std::vector<std::uint8_t>& u8() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr char kTensorExtension[] = ".anof";

std::vector<std::byte> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::byte> bytes);

Tensor read_tensor(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place, so a
/// crashed writer never leaves a half-written tensor behind.
void write_tensor(const std::filesystem::path& path, const Tensor& tensor);

// Conversions between tensors and the domain types.

/// Accepts [H_p, W_p, d].
template <typename Scalar>
FeatureGrid<Scalar> feature_grid_from_tensor(const Tensor& tensor, std::string image_id);

template <typename Scalar>
Tensor tensor_from_feature_grid(const FeatureGrid<Scalar>& grid);

/// Accepts [N, d] or [H_p, W_p, d]; every row is tagged with source_id.
template <typename Scalar>
ReferencePool<Scalar> reference_pool_from_tensor(const Tensor& tensor, const std::string& source_id);

/// Row-wise concatenation; all pools must share the feature dimension.
template <typename Scalar>
ReferencePool<Scalar> concatenate_pools(std::span<const ReferencePool<Scalar>> pools);

Tensor tensor_from_map(const ImageMap& map);
ImageMap map_from_tensor(const Tensor& tensor);

Tensor tensor_from_mask(const BinaryMask& mask);
/// Accepts u8 [H, W] with values in {0, 1}.
BinaryMask mask_from_tensor(const Tensor& tensor);

}  // namespace anoco
