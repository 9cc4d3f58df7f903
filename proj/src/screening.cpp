#include "anoco/screening.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#if defined(__AVX512F__) && defined(__AVX512BW__) && defined(__AVX512VNNI__)
#define ANOCO_HAVE_VNNI 1
#include <immintrin.h>
#else
#define ANOCO_HAVE_VNNI 0
#endif

#if defined(__AMX_TILE__) && defined(__AMX_INT8__) && defined(__linux__)
#define ANOCO_HAVE_AMX 1
#include <immintrin.h>
#include <sys/syscall.h>
#include <unistd.h>
#else
#define ANOCO_HAVE_AMX 0
#endif

namespace anoco {

namespace {

constexpr double kUnitRound = 0x1p-24;
// int32 accumulation of up to 2 * 127 * 255 per dimension stays exact below this.
constexpr Index kMaxInt8Dim = 65536;
// |x/step - round(x/step)| <= 1/2, plus the double rounding of x/step.
constexpr double kHalfStep = 0.5 + 0x1p-40;
// Residual left after the low level: |rho - round(254 rho) / 254| <= 1/508.
constexpr double kLowLevel = 254.0;
constexpr double kInvLowLevel = 1.0 / kLowLevel;
constexpr double kSigma = 1.0 / 508.0 + 0x1p-40;

// Distance between the dot of double unit rows and the exactly evaluated
// cosine of the original rows, plus the final float store of approx.
double exact_slack(Index dim) { return (4.0 * static_cast<double>(dim) + 64.0) * 0x1p-53 + 2.0 * kUnitRound; }

struct Quantized {
  double scale = 0;
  double l1 = 0;     // sum |hi + lo / 254| (or sum |hi| without a low level)
  double lo_l2 = 0;  // |lo|_2
};

// Round half to even, exact for |t| < 2^51 and branch-free so it vectorizes.
constexpr double kRoundMagic = 0x1.8p52;

double round_level(double t) { return std::min(127.0, std::max(-127.0, (t + kRoundMagic) - kRoundMagic)); }

/// hi = round(x / s), lo = round(254 (x / s - hi)), s = max|x| / 127.
/// Without a low level only hi is written. x / s is taken as x * (1 / s);
/// the few ulps this adds are covered by the 2^-40 margins above.
template <bool kTwoLevel>
Quantized quantize_row(const double* x, Index dim, std::int8_t* hi, std::int8_t* lo) {
  const double peak = dim > 0 ? Eigen::Map<const Eigen::ArrayXd>(x, dim).abs().maxCoeff() : 0.0;
  Quantized q;
  if (peak == 0.0) {
    std::fill(hi, hi + dim, std::int8_t{0});
    if (kTwoLevel) std::fill(lo, lo + dim, std::int8_t{0});
    return q;
  }
  q.scale = peak / 127.0;
  const double inv = 1.0 / q.scale;
  constexpr Index kLanes = 8;
  double l1[kLanes] = {}, sq[kLanes] = {};
  const auto one = [&](Index k, Index u) {
    const double t = x[k] * inv;
    const double h = round_level(t);
    hi[k] = static_cast<std::int8_t>(static_cast<int>(h));
    if constexpr (kTwoLevel) {
      const double l = round_level(kLowLevel * (t - h));
      lo[k] = static_cast<std::int8_t>(static_cast<int>(l));
      l1[u] += std::abs(h + l * kInvLowLevel);
      sq[u] += l * l;
    } else {
      l1[u] += std::abs(h);
    }
  };
  Index k = 0;
#if defined(__AVX512F__) && defined(__AVX512VL__)
  // Same operations as one(), eight lanes at a time.
  const __m512d inv_v = _mm512_set1_pd(inv), lim = _mm512_set1_pd(127.0), low = _mm512_set1_pd(kLowLevel);
  const __m512d inv_low = _mm512_set1_pd(kInvLowLevel);
  const auto level = [&](__m512d t) {
    return _mm512_min_pd(lim, _mm512_max_pd(-lim, _mm512_roundscale_pd(t, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC)));
  };
  const auto store = [](std::int8_t* dst, __m512d v) {
    _mm_storel_epi64(reinterpret_cast<__m128i*>(dst), _mm256_cvtepi32_epi8(_mm512_cvtpd_epi32(v)));
  };
  __m512d l1_v = _mm512_setzero_pd(), sq_v = _mm512_setzero_pd();
  for (; k + kLanes <= dim; k += kLanes) {
    const __m512d t = _mm512_mul_pd(_mm512_loadu_pd(x + k), inv_v);
    const __m512d h = level(t);
    store(hi + k, h);
    if constexpr (kTwoLevel) {
      const __m512d l = level(_mm512_mul_pd(low, _mm512_sub_pd(t, h)));
      store(lo + k, l);
      l1_v = _mm512_add_pd(l1_v, _mm512_abs_pd(_mm512_add_pd(h, _mm512_mul_pd(l, inv_low))));
      sq_v = _mm512_add_pd(sq_v, _mm512_mul_pd(l, l));
    } else {
      l1_v = _mm512_add_pd(l1_v, _mm512_abs_pd(h));
    }
  }
  _mm512_storeu_pd(l1, l1_v);
  _mm512_storeu_pd(sq, sq_v);
#else
  for (; k + kLanes <= dim; k += kLanes) {
    for (Index u = 0; u < kLanes; ++u) one(k + u, u);
  }
#endif
  for (Index u = 0; k < dim; ++k, ++u) one(k, u);
  for (Index u = 0; u < kLanes; ++u) {
    q.l1 += l1[u];
    q.lo_l2 += sq[u];
  }
  // Covers the rounding of l / 254 and of the sums themselves.
  q.l1 *= 1 + 0x1p-40;
  q.lo_l2 = std::sqrt(q.lo_l2) * (1 + 0x1p-40);
  return q;
}

#if ANOCO_HAVE_VNNI
constexpr Index kPanel = 32;     // references per packed panel (two zmm lanes of 16)
constexpr Index kQueryTile = 8;  // queries per microkernel call

// acc[a][h] holds dot(q_a, r_{panel*32 + 16h + lane}) over the padded dims.
void vnni_tile(const std::uint8_t* queries, Index stride, const std::int8_t* panel, Index groups,
               std::int32_t* out, Index out_stride) {
  __m512i acc[kQueryTile][2];
  for (auto& a : acc) a[0] = a[1] = _mm512_setzero_si512();
  for (Index g = 0; g < groups; ++g) {
    const __m512i b0 = _mm512_loadu_si512(panel + g * 128);
    const __m512i b1 = _mm512_loadu_si512(panel + g * 128 + 64);
    for (Index a = 0; a < kQueryTile; ++a) {
      std::int32_t word;
      std::memcpy(&word, queries + a * stride + 4 * g, 4);
      const __m512i qa = _mm512_set1_epi32(word);
      acc[a][0] = _mm512_dpbusd_epi32(acc[a][0], qa, b0);
      acc[a][1] = _mm512_dpbusd_epi32(acc[a][1], qa, b1);
    }
  }
  for (Index a = 0; a < kQueryTile; ++a) {
    _mm512_storeu_si512(out + a * out_stride, acc[a][0]);
    _mm512_storeu_si512(out + a * out_stride + 16, acc[a][1]);
  }
}
#endif

#if ANOCO_HAVE_AMX
constexpr Index kTile = 16;   // rows of every tile; references per B panel
constexpr Index kTileK = 64;  // int8 dims per tile row

bool request_amx() {
  constexpr long kReqXcompPerm = 0x1023;
  constexpr long kXfeatureTileData = 18;
  static const bool granted = syscall(SYS_arch_prctl, kReqXcompPerm, kXfeatureTileData) == 0;
  return granted;
}

struct alignas(64) TileConfig {
  std::uint8_t palette = 1;
  std::uint8_t start_row = 0;
  std::uint8_t reserved[14] = {};
  std::uint16_t colsb[16] = {};
  std::uint8_t rows[16] = {};
};

// Offset of the 16 x 64 tile for panel p and dim block kb. Reference tiles
// hold dims kb*64 + 4r .. 4r+3 of each of the 16 references in row r; query
// tiles hold dims kb*64 .. kb*64+63 of query r.
std::size_t tile_offset(Index panel, Index kb, Index kblocks) {
  return static_cast<std::size_t>((panel * kblocks + kb) * kTile * kTileK);
}

// 16 queries x 32 references (panels p and p+1): hh = hi.hi, cross = hi.lo + lo.hi.
// Queries are packed like references: one contiguous 16 x 64 tile per dim block.
void amx_block(const std::int8_t* q_hi, const std::int8_t* q_lo, const std::int8_t* b_hi, const std::int8_t* b_lo,
               Index kblocks, std::int32_t* hh, std::int32_t* cross) {
  _tile_zero(0);
  _tile_zero(1);
  _tile_zero(2);
  _tile_zero(3);
  const std::size_t next_panel = static_cast<std::size_t>(kblocks * kTile * kTileK);
  for (Index kb = 0; kb < kblocks; ++kb) {
    const std::size_t off = static_cast<std::size_t>(kb * kTile * kTileK);
    _tile_loadd(4, q_hi + off, kTileK);
    _tile_loadd(5, q_lo + off, kTileK);
    _tile_loadd(6, b_hi + off, kTileK);
    _tile_loadd(7, b_hi + off + next_panel, kTileK);
    _tile_dpbssd(0, 4, 6);
    _tile_dpbssd(1, 4, 7);
    _tile_dpbssd(2, 5, 6);
    _tile_dpbssd(3, 5, 7);
    _tile_loadd(6, b_lo + off, kTileK);
    _tile_loadd(7, b_lo + off + next_panel, kTileK);
    _tile_dpbssd(2, 4, 6);
    _tile_dpbssd(3, 4, 7);
  }
  constexpr Index out_stride = 2 * kTile * sizeof(std::int32_t);
  _tile_stored(0, hh, out_stride);
  _tile_stored(1, hh + kTile, out_stride);
  _tile_stored(2, cross, out_stride);
  _tile_stored(3, cross + kTile, out_stride);
}
#endif

}  // namespace

bool SimilarityScreen::available(ScreenKernel kernel) {
  switch (kernel) {
    case ScreenKernel::Auto:
    case ScreenKernel::Float:
      return true;
    case ScreenKernel::Vnni:
      return ANOCO_HAVE_VNNI != 0;
    case ScreenKernel::Amx:
#if ANOCO_HAVE_AMX
      return request_amx();
#else
      return false;
#endif
  }
  return false;
}

SimilarityScreen::SimilarityScreen(const FeatureMatrix<double>& unit_references, ScreenKernel kernel)
    : rows_(unit_references.rows()), dim_(unit_references.cols()) {
  if (kernel == ScreenKernel::Auto) {
    kernel = ScreenKernel::Float;
    if (dim_ <= kMaxInt8Dim) {
      if (available(ScreenKernel::Amx)) {
        kernel = ScreenKernel::Amx;
      } else if (available(ScreenKernel::Vnni)) {
        kernel = ScreenKernel::Vnni;
      }
    }
  }
  require(available(kernel), ErrorCode::InvalidArgument, "similarity screen kernel not available on this host");
  require(kernel == ScreenKernel::Float || dim_ <= kMaxInt8Dim, ErrorCode::InvalidArgument,
          "int8 similarity screen supports at most " + std::to_string(kMaxInt8Dim) + " dimensions");
  kernel_ = kernel;
  switch (kernel_) {
    case ScreenKernel::Amx:
      prepare_amx(unit_references);
      break;
    case ScreenKernel::Vnni:
      prepare_vnni(unit_references);
      break;
    default:
      unit_references_ = unit_references.cast<float>();
  }
}

void SimilarityScreen::prepare_amx([[maybe_unused]] const FeatureMatrix<double>& unit_references) {
#if ANOCO_HAVE_AMX
  padded_dim_ = (dim_ + kTileK - 1) / kTileK * kTileK;
  const Index kblocks = padded_dim_ / kTileK;
  const Index panels = ((rows_ + kTile - 1) / kTile + 1) / 2 * 2;
  packed_.assign(static_cast<std::size_t>(panels * kblocks * kTile * kTileK), 0);
  packed_lo_.assign(packed_.size(), 0);
  scale_.assign(static_cast<std::size_t>(rows_), 0.0);
  std::vector<std::int8_t> hi(static_cast<std::size_t>(padded_dim_), 0), lo(hi.size(), 0);
  for (Index j = 0; j < rows_; ++j) {
    const auto q = quantize_row<true>(unit_references.row(j).data(), dim_, hi.data(), lo.data());
    scale_[j] = q.scale;
    max_scale_ = std::max(max_scale_, q.scale);
    max_scale_l1_ = std::max(max_scale_l1_, q.scale * q.l1);
    max_scale_lo_l2_ = std::max(max_scale_lo_l2_, q.scale * q.lo_l2);
    const Index panel = j / kTile, lane = j % kTile;
    for (Index kb = 0; kb < kblocks; ++kb) {
      for (Index r = 0; r < kTile; ++r) {
        const std::size_t dst = tile_offset(panel, kb, kblocks) + static_cast<std::size_t>(r * kTileK + lane * 4);
        const Index src = kb * kTileK + r * 4;
        std::memcpy(&packed_[dst], &hi[src], 4);
        std::memcpy(&packed_lo_[dst], &lo[src], 4);
      }
    }
  }
#endif
}

void SimilarityScreen::prepare_vnni([[maybe_unused]] const FeatureMatrix<double>& unit_references) {
#if ANOCO_HAVE_VNNI
  padded_dim_ = (dim_ + 3) / 4 * 4;
  const Index panels = (rows_ + kPanel - 1) / kPanel;
  const Index groups = padded_dim_ / 4;
  packed_.assign(static_cast<std::size_t>(panels * groups * 128), 0);
  scale_.assign(static_cast<std::size_t>(rows_), 0.0);
  row_sum_.assign(static_cast<std::size_t>(rows_), 0);
  std::vector<std::int8_t> row(static_cast<std::size_t>(padded_dim_), 0);
  for (Index j = 0; j < rows_; ++j) {
    const auto q = quantize_row<false>(unit_references.row(j).data(), dim_, row.data(), nullptr);
    scale_[j] = q.scale;
    std::int32_t sum = 0;
    for (Index k = 0; k < dim_; ++k) sum += row[k];
    row_sum_[j] = sum;
    max_scale_ = std::max(max_scale_, q.scale);
    max_scale_l1_ = std::max(max_scale_l1_, q.scale * q.l1);
    const Index panel = j / kPanel, lane = j % kPanel;
    for (Index g = 0; g < groups; ++g) {
      std::memcpy(&packed_[static_cast<std::size_t>((panel * groups + g) * 128 + lane * 4)], &row[g * 4], 4);
    }
  }
#endif
}

void SimilarityScreen::screen(const FeatureMatrix<double>& unit_queries, FeatureMatrix<float>& approx,
                              Eigen::VectorXd& bound) const {
  require(unit_queries.cols() == dim_, ErrorCode::DimensionMismatch, "screen: feature dimension mismatch");
  approx.resize(unit_queries.rows(), rows_);
  bound.resize(unit_queries.rows());
  switch (kernel_) {
    case ScreenKernel::Amx:
      screen_amx(unit_queries, approx, bound);
      break;
    case ScreenKernel::Vnni:
      screen_vnni(unit_queries, approx, bound);
      break;
    default: {
      const FeatureMatrix<float> q = unit_queries.cast<float>();
      approx.noalias() = q * unit_references_.transpose();
      // Rounding the unit rows to float moves each dot by <= 2u(1 + u); the
      // float GEMM adds gamma_d * sum |q_k r_k| with gamma_d = du / (1 - du).
      const double du = static_cast<double>(dim_) * kUnitRound;
      const double gamma = du < 0.5 ? du / (1 - du) : 2.0;
      bound.setConstant(gamma * (1 + 3 * kUnitRound) + 3 * kUnitRound + exact_slack(dim_));
    }
  }
}

void SimilarityScreen::screen_amx([[maybe_unused]] const FeatureMatrix<double>& unit_queries,
                                  [[maybe_unused]] FeatureMatrix<float>& approx,
                                  [[maybe_unused]] Eigen::VectorXd& bound) const {
#if ANOCO_HAVE_AMX
  const Index nq = unit_queries.rows();
  const Index kblocks = padded_dim_ / kTileK;
  const Index tiles = (nq + kTile - 1) / kTile;
  const Index panels = static_cast<Index>(packed_.size()) / (kblocks * kTile * kTileK);
  // Reused per thread: fresh multi-megabyte buffers cost more in page faults
  // than the quantization itself.
  thread_local std::vector<std::int8_t> hi, lo, row_hi, row_lo;
  thread_local std::vector<double> qscale;
  hi.assign(static_cast<std::size_t>(tiles * kTile * padded_dim_), 0);
  lo.assign(hi.size(), 0);
  row_hi.assign(static_cast<std::size_t>(padded_dim_), 0);
  row_lo.assign(row_hi.size(), 0);
  qscale.assign(static_cast<std::size_t>(nq), 0.0);
  const double d = static_cast<double>(dim_);
  for (Index i = 0; i < nq; ++i) {
    const auto q = quantize_row<true>(unit_queries.row(i).data(), dim_, row_hi.data(), row_lo.data());
    qscale[i] = q.scale;
    for (Index kb = 0; kb < kblocks; ++kb) {
      const std::size_t dst = tile_offset(i / kTile, kb, kblocks) + static_cast<std::size_t>((i % kTile) * kTileK);
      std::memcpy(&hi[dst], &row_hi[kb * kTileK], kTileK);
      std::memcpy(&lo[dst], &row_lo[kb * kTileK], kTileK);
    }
    // s_q s_r (|lo_q.lo_r| / 254^2 + sigma (|p_q|_1 + |p_r|_1) + d sigma^2), p = hi + lo / 254.
    bound(i) = q.scale * (q.lo_l2 * max_scale_lo_l2_ / (kLowLevel * kLowLevel) + kSigma * q.l1 * max_scale_ +
                          kSigma * max_scale_l1_ + d * kSigma * kSigma * max_scale_) *
                   (1 + 0x1p-40) +
               exact_slack(dim_);
  }

  TileConfig config;
  for (int t = 0; t < 8; ++t) {
    config.rows[t] = kTile;
    config.colsb[t] = kTileK;
  }
  _tile_loadconfig(&config);
  std::int32_t hh[kTile * 2 * kTile], cross[kTile * 2 * kTile];
  for (Index p = 0; p < panels; p += 2) {
    const Index j0 = p * kTile;
    if (j0 >= rows_) break;
    const Index width = std::min(2 * kTile, rows_ - j0);
    const std::int8_t* b_hi = &packed_[tile_offset(p, 0, kblocks)];
    const std::int8_t* b_lo = &packed_lo_[tile_offset(p, 0, kblocks)];
    for (Index t = 0; t < tiles; ++t) {
      const std::size_t at = tile_offset(t, 0, kblocks);
      amx_block(&hi[at], &lo[at], b_hi, b_lo, kblocks, hh, cross);
      const Index i0 = t * kTile;
      const Index height = std::min(kTile, nq - i0);
      for (Index a = 0; a < height; ++a) {
        const double qs = qscale[i0 + a];
        float* dst = approx.row(i0 + a).data() + j0;
        for (Index l = 0; l < width; ++l) {
          const double v = static_cast<double>(hh[a * 2 * kTile + l]) +
                           static_cast<double>(cross[a * 2 * kTile + l]) * kInvLowLevel;
          dst[l] = static_cast<float>(qs * scale_[j0 + l] * v);
        }
      }
    }
  }
  _tile_release();
#endif
}

void SimilarityScreen::screen_vnni([[maybe_unused]] const FeatureMatrix<double>& unit_queries,
                                   [[maybe_unused]] FeatureMatrix<float>& approx,
                                   [[maybe_unused]] Eigen::VectorXd& bound) const {
#if ANOCO_HAVE_VNNI
  const Index nq = unit_queries.rows();
  const Index groups = padded_dim_ / 4;
  const Index panels = (rows_ + kPanel - 1) / kPanel;
  const Index tiles = (nq + kQueryTile - 1) / kQueryTile;

  // Queries as u8 = q + 128 so vpdpbusd can take them as the unsigned operand;
  // sum_k (q_k + 128) r_k = q.r + 128 * sum_k r_k.
  std::vector<std::uint8_t> shifted(static_cast<std::size_t>(tiles * kQueryTile * padded_dim_), 128);
  std::vector<double> qscale(static_cast<std::size_t>(nq));
  std::vector<std::int8_t> row(static_cast<std::size_t>(dim_));
  for (Index i = 0; i < nq; ++i) {
    const auto q = quantize_row<false>(unit_queries.row(i).data(), dim_, row.data(), nullptr);
    qscale[i] = q.scale;
    for (Index k = 0; k < dim_; ++k) shifted[i * padded_dim_ + k] = static_cast<std::uint8_t>(row[k] + 128);
    bound(i) = q.scale * (kHalfStep * q.l1 * max_scale_ + kHalfStep * max_scale_l1_ +
                          kHalfStep * kHalfStep * static_cast<double>(dim_) * max_scale_) *
                   (1 + 0x1p-40) +
               exact_slack(dim_);
  }

  std::vector<std::int32_t> tile_out(static_cast<std::size_t>(kQueryTile * kPanel));
  for (Index p = 0; p < panels; ++p) {
    const std::int8_t* panel = &packed_[static_cast<std::size_t>(p * groups * 128)];
    const Index j0 = p * kPanel;
    const Index width = std::min(kPanel, rows_ - j0);
    for (Index t = 0; t < tiles; ++t) {
      vnni_tile(&shifted[static_cast<std::size_t>(t * kQueryTile * padded_dim_)], padded_dim_, panel, groups,
                tile_out.data(), kPanel);
      const Index i0 = t * kQueryTile;
      const Index height = std::min(kQueryTile, nq - i0);
      for (Index a = 0; a < height; ++a) {
        const double qs = qscale[i0 + a];
        float* dst = approx.row(i0 + a).data() + j0;
        for (Index l = 0; l < width; ++l) {
          const std::int64_t raw = static_cast<std::int64_t>(tile_out[a * kPanel + l]) - 128LL * row_sum_[j0 + l];
          dst[l] = static_cast<float>(qs * scale_[j0 + l] * static_cast<double>(raw));
        }
      }
    }
  }
#endif
}

namespace {

// Smallest float f with f >= x, so that v >= x <=> v >= f for every float v.
float float_ceil(double x) {
  float f = static_cast<float>(x);
  if (static_cast<double>(f) < x) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace

void collect_in_range(std::span<const float> values, double lo, double hi, std::vector<Index>& out) {
  const float lo_f = float_ceil(lo), hi_f = float_ceil(hi);
  const Index n = static_cast<Index>(values.size());
  Index j = 0;
#if defined(__AVX512F__)
  const __m512 lo_v = _mm512_set1_ps(lo_f), hi_v = _mm512_set1_ps(hi_f);
  for (; j + 16 <= n; j += 16) {
    const __m512 v = _mm512_loadu_ps(values.data() + j);
    unsigned mask = _mm512_cmp_ps_mask(v, lo_v, _CMP_GE_OQ) & _mm512_cmp_ps_mask(v, hi_v, _CMP_LT_OQ);
    for (; mask != 0; mask &= mask - 1) out.push_back(j + std::countr_zero(mask));
  }
#endif
  for (; j < n; ++j) {
    if (values[j] >= lo_f && values[j] < hi_f) out.push_back(j);
  }
}

std::pair<float, float> extrema(std::span<const float> values) {
  const Eigen::Map<const Eigen::ArrayXf> v(values.data(), static_cast<Index>(values.size()));
  return {v.minCoeff(), v.maxCoeff()};
}

}  // namespace anoco
