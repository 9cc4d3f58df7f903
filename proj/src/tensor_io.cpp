#include "anoco/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace anoco {

namespace {

constexpr std::array<char, 4> kMagic = {'A', 'N', 'O', 'F'};
constexpr std::size_t kFixedHeader = 4 + 4 + 1 + 1;

template <typename UInt>
void put_le(std::vector<std::byte>& out, UInt value) {
  for (std::size_t b = 0; b < sizeof(UInt); ++b) {
    out.push_back(static_cast<std::byte>((value >> (8 * b)) & 0xFFu));
  }
}

template <typename UInt>
UInt get_le(std::span<const std::byte> in, std::size_t offset) {
  UInt value = 0;
  for (std::size_t b = 0; b < sizeof(UInt); ++b) {
    value |= static_cast<UInt>(std::to_integer<unsigned>(in[offset + b])) << (8 * b);
  }
  return value;
}

std::size_t scalar_size(DType dtype) { return dtype == DType::F32 ? 4 : 1; }

std::uint64_t checked_numel(std::span<const std::uint64_t> dims) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      fail(ErrorCode::PayloadSizeMismatch, "tensor dims overflow");
    }
    n *= d;
  }
  return n;
}

void check_finite(const std::vector<float>& values) {
  for (float v : values) {
    require(std::isfinite(v), ErrorCode::NonFiniteScalar, "tensor contains NaN or Inf");
  }
}

}  // namespace

std::uint64_t Tensor::numel() const { return checked_numel(dims); }

const std::vector<float>& Tensor::f32() const {
  require(dtype() == DType::F32, ErrorCode::UnsupportedDtype, "expected an f32 tensor");
  return std::get<0>(values);
}

const std::vector<std::uint8_t>& Tensor::u8() const {
  require(dtype() == DType::U8, ErrorCode::UnsupportedDtype, "expected a u8 tensor");
  return std::get<1>(values);
}

std::vector<std::byte> encode_tensor(const Tensor& tensor) {
  require(tensor.dims.size() <= 255, ErrorCode::ShapeMismatch, "tensor has more than 255 dims");
  const std::uint64_t n = tensor.numel();
  const std::size_t stored = tensor.dtype() == DType::F32 ? std::get<0>(tensor.values).size()
                                                          : std::get<1>(tensor.values).size();
  require(stored == n, ErrorCode::ShapeMismatch, "tensor values do not match its dims");

  std::vector<std::byte> out;
  out.reserve(kFixedHeader + 8 * tensor.dims.size() + n * scalar_size(tensor.dtype()));
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint32_t>(out, kTensorVersion);
  out.push_back(static_cast<std::byte>(tensor.dtype()));
  out.push_back(static_cast<std::byte>(tensor.dims.size()));
  for (auto d : tensor.dims) put_le<std::uint64_t>(out, d);

  if (tensor.dtype() == DType::F32) {
    const auto& v = std::get<0>(tensor.values);
    check_finite(v);
    for (float x : v) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
  } else {
    for (auto x : std::get<1>(tensor.values)) out.push_back(static_cast<std::byte>(x));
  }
  return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes) {
  require(bytes.size() >= 4 && std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                                          [](char c, std::byte b) { return static_cast<std::byte>(c) == b; }),
          ErrorCode::BadMagic, "missing ANOF magic");
  require(bytes.size() >= kFixedHeader, ErrorCode::TruncatedPayload, "truncated tensor header");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  require(version == kTensorVersion, ErrorCode::VersionUnsupported,
          "unsupported tensor version " + std::to_string(version));
  const auto code = std::to_integer<std::uint8_t>(bytes[8]);
  require(code <= 1, ErrorCode::UnsupportedDtype, "unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t ndim = std::to_integer<std::uint8_t>(bytes[9]);
  require(bytes.size() >= kFixedHeader + 8 * ndim, ErrorCode::TruncatedPayload, "truncated tensor dims");

  Tensor tensor;
  tensor.dims.resize(ndim);
  for (std::size_t k = 0; k < ndim; ++k) tensor.dims[k] = get_le<std::uint64_t>(bytes, kFixedHeader + 8 * k);

  const std::size_t offset = kFixedHeader + 8 * ndim;
  const std::uint64_t n = tensor.numel();
  const std::size_t available = bytes.size() - offset;
  require(n <= available / scalar_size(dtype), ErrorCode::TruncatedPayload,
          "payload shorter than its dims declare");
  require(n * scalar_size(dtype) == available, ErrorCode::PayloadSizeMismatch,
          "payload longer than its dims declare");

  if (dtype == DType::F32) {
    std::vector<float> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset + 4 * i));
    check_finite(v);
    tensor.values = std::move(v);
  } else {
    std::vector<std::uint8_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::to_integer<std::uint8_t>(bytes[offset + i]);
    tensor.values = std::move(v);
  }
  return tensor;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorCode::IoFailure, "read failed: " + path.string());
  return decode_tensor(std::as_bytes(std::span<const char>(raw)));
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  const auto bytes = encode_tensor(tensor);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::IoFailure, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::IoFailure, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::IoFailure, "cannot move " + tmp.string() + " into place: " + ec.message());
}

template <typename Scalar>
FeatureGrid<Scalar> feature_grid_from_tensor(const Tensor& tensor, std::string image_id) {
  require(tensor.dims.size() == 3, ErrorCode::ShapeMismatch,
          "feature grid '" + image_id + "' must be a [H_p, W_p, d] tensor");
  const auto& v = tensor.f32();
  FeatureGrid<Scalar> grid;
  grid.height = static_cast<Index>(tensor.dims[0]);
  grid.width = static_cast<Index>(tensor.dims[1]);
  grid.image_id = std::move(image_id);
  const auto dim = static_cast<Index>(tensor.dims[2]);
  grid.data = Eigen::Map<const FeatureMatrix<float>>(v.data(), grid.height * grid.width, dim).template cast<Scalar>();
  grid.validate();
  return grid;
}

template <typename Scalar>
Tensor tensor_from_feature_grid(const FeatureGrid<Scalar>& grid) {
  grid.validate();
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(grid.height), static_cast<std::uint64_t>(grid.width),
            static_cast<std::uint64_t>(grid.dim())};
  std::vector<float> v(grid.data.size());
  Eigen::Map<FeatureMatrix<float>>(v.data(), grid.size(), grid.dim()) = grid.data.template cast<float>();
  t.values = std::move(v);
  return t;
}

template <typename Scalar>
ReferencePool<Scalar> reference_pool_from_tensor(const Tensor& tensor, const std::string& source_id) {
  require(tensor.dims.size() == 2 || tensor.dims.size() == 3, ErrorCode::ShapeMismatch,
          "reference tensor '" + source_id + "' must be [N, d] or [H_p, W_p, d]");
  const auto& v = tensor.f32();
  const auto dim = static_cast<Index>(tensor.dims.back());
  const auto rows = dim == 0 ? Index{0} : static_cast<Index>(v.size()) / dim;
  ReferencePool<Scalar> pool;
  pool.data = Eigen::Map<const FeatureMatrix<float>>(v.data(), rows, dim).template cast<Scalar>();
  pool.source_ids.assign(static_cast<std::size_t>(rows), source_id);
  pool.validate();
  return pool;
}

template <typename Scalar>
ReferencePool<Scalar> concatenate_pools(std::span<const ReferencePool<Scalar>> pools) {
  require(!pools.empty(), ErrorCode::EmptyPool, "no reference pools to concatenate");
  Index rows = 0;
  const Index dim = pools.front().dim();
  for (const auto& p : pools) {
    require(p.dim() == dim, ErrorCode::DimensionMismatch, "reference files disagree on feature dimension");
    rows += p.size();
  }
  ReferencePool<Scalar> out;
  out.data.resize(rows, dim);
  Index at = 0;
  for (const auto& p : pools) {
    out.data.middleRows(at, p.size()) = p.data;
    at += p.size();
    if (p.source_ids.empty()) {
      out.source_ids.insert(out.source_ids.end(), static_cast<std::size_t>(p.size()), std::string{});
    } else {
      out.source_ids.insert(out.source_ids.end(), p.source_ids.begin(), p.source_ids.end());
    }
  }
  return out;
}

Tensor tensor_from_map(const ImageMap& map) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(map.rows()), static_cast<std::uint64_t>(map.cols())};
  std::vector<float> v(map.size());
  Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), map.rows(), map.cols()) =
      map.cast<float>();
  t.values = std::move(v);
  return t;
}

ImageMap map_from_tensor(const Tensor& tensor) {
  require(tensor.dims.size() == 2, ErrorCode::ShapeMismatch, "anomaly map must be a [H, W] tensor");
  const auto& v = tensor.f32();
  return Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
             v.data(), static_cast<Index>(tensor.dims[0]), static_cast<Index>(tensor.dims[1]))
      .cast<double>();
}

Tensor tensor_from_mask(const BinaryMask& mask) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(mask.rows()), static_cast<std::uint64_t>(mask.cols())};
  t.values = std::vector<std::uint8_t>(mask.data(), mask.data() + mask.size());
  return t;
}

BinaryMask mask_from_tensor(const Tensor& tensor) {
  require(tensor.dims.size() == 2, ErrorCode::ShapeMismatch, "mask must be a [H, W] tensor");
  const auto& v = tensor.u8();
  for (auto x : v) require(x <= 1, ErrorCode::InvalidArgument, "mask values must be 0 or 1");
  return Eigen::Map<const BinaryMask>(v.data(), static_cast<Index>(tensor.dims[0]), static_cast<Index>(tensor.dims[1]));
}

template FeatureGrid<float> feature_grid_from_tensor<float>(const Tensor&, std::string);
template FeatureGrid<double> feature_grid_from_tensor<double>(const Tensor&, std::string);
template Tensor tensor_from_feature_grid<float>(const FeatureGrid<float>&);
template Tensor tensor_from_feature_grid<double>(const FeatureGrid<double>&);
template ReferencePool<float> reference_pool_from_tensor<float>(const Tensor&, const std::string&);
template ReferencePool<double> reference_pool_from_tensor<double>(const Tensor&, const std::string&);
template ReferencePool<float> concatenate_pools<float>(std::span<const ReferencePool<float>>);
template ReferencePool<double> concatenate_pools<double>(std::span<const ReferencePool<double>>);

}  // namespace anoco
