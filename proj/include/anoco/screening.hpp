#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "anoco/types.hpp"

namespace anoco {

enum class ScreenKernel { Auto, Amx, Vnni, Float };

/// Fast approximate cosine similarities with a guaranteed error bound.
///
/// Rows handed to the screen must be unit-norm (or exactly zero). For query i
/// and any reference j, |approx(i, j) - cos(q_i, r_j)| <= bound(i). Callers
/// use the bound to decide which pairs need exact evaluation, so every
/// decision downstream stays identical to exhaustive exact evaluation.
///
/// Amx splits each row into two int8 levels and multiplies them on AMX tiles
/// (bound around 2e-4 at d = 1024). Vnni quantizes to a single int8 level
/// (bound around 3e-2). Float is a plain float GEMM.
class SimilarityScreen {
 public:
  SimilarityScreen() = default;
  explicit SimilarityScreen(const FeatureMatrix<double>& unit_references, ScreenKernel kernel = ScreenKernel::Auto);

  Index size() const { return rows_; }
  Index dim() const { return dim_; }
  ScreenKernel kernel() const { return kernel_; }

  /// approx is resized to queries x references.
  void screen(const FeatureMatrix<double>& unit_queries, FeatureMatrix<float>& approx,
              Eigen::VectorXd& bound) const;

  static bool available(ScreenKernel kernel);

 private:
  void prepare_amx(const FeatureMatrix<double>& unit_references);
  void prepare_vnni(const FeatureMatrix<double>& unit_references);
  void screen_amx(const FeatureMatrix<double>& unit_queries, FeatureMatrix<float>& approx,
                  Eigen::VectorXd& bound) const;
  void screen_vnni(const FeatureMatrix<double>& unit_queries, FeatureMatrix<float>& approx,
                   Eigen::VectorXd& bound) const;

  ScreenKernel kernel_ = ScreenKernel::Float;
  Index rows_ = 0;
  Index dim_ = 0;
  Index padded_dim_ = 0;

  // int8 paths
  std::vector<std::int8_t> packed_;     // high level (Amx) or the only level (Vnni)
  std::vector<std::int8_t> packed_lo_;  // Amx low level
  std::vector<double> scale_;           // per-reference quantization step
  std::vector<std::int32_t> row_sum_;   // Vnni: sum of quantized entries
  double max_scale_ = 0;                // max_j scale_j
  double max_scale_l1_ = 0;             // max_j scale_j * |r_j|_1 in quantized units
  double max_scale_lo_l2_ = 0;          // Amx: max_j scale_j * |lo_j|_2

  // float fallback
  FeatureMatrix<float> unit_references_;
};

/// Appends, in ascending order, every j with lo <= values[j] < hi.
void collect_in_range(std::span<const float> values, double lo, double hi, std::vector<Index>& out);

/// {min, max} of a non-empty span.
std::pair<float, float> extrema(std::span<const float> values);

}  // namespace anoco
