#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anoco/types.hpp"

namespace anoco {

/// Mann-Whitney AUROC with half credit for ties. Labels: 1 = anomalous.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Non-interpolated average precision: sum_k (R_k - R_{k-1}) P_k over the
/// distinct score thresholds, predicting anomalous when score >= t.
double aupr(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Best F1 over the distinct score thresholds.
double f1_max(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct ProOptions {
  double fpr_limit = 0.3;
  int levels = 200;
};

/// Connected components of a binary mask, 8-connected. Background is -1,
/// components are numbered from 0 in raster order of their first pixel.
Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label_components(const BinaryMask& mask,
                                                                                     int* count = nullptr);

/// Pooled pixel values at quantile levels sorted[floor(k (n-1) / (levels-1))].
std::vector<double> quantile_thresholds(std::vector<double> values, int levels);

/// Per-region overlap integrated over FPR in [0, fpr_limit] and divided by
/// fpr_limit. The curve starts at (0, 0), is sorted by (fpr, overlap), and is
/// linearly interpolated at the limit.
double pro(std::span<const ImageMap> maps, std::span<const BinaryMask> masks, const ProOptions& options = {});

/// Area under a piecewise-linear curve from x = 0 to x = limit. Points must be
/// sorted by x; the last y is held if the curve stops short of the limit.
double trapezoid_area(std::span<const double> x, std::span<const double> y, double limit);

struct EvalSample {
  std::string image_id;
  double image_score = 0.0;
  std::uint8_t label = 0;
  std::optional<ImageMap> map;
  std::optional<BinaryMask> mask;
};

struct EvalOptions {
  bool pixel_metrics = true;
  bool normalize_maps = false;  // per-image min-max before pooling pixels
  ProOptions pro;
};

struct EvalReport {
  std::size_t images = 0;
  std::size_t anomalous = 0;
  double image_auroc = 0.0;
  double image_aupr = 0.0;
  double image_f1_max = 0.0;
  std::optional<double> pixel_auroc;
  std::optional<double> pixel_pro;
  std::optional<double> pixel_f1_max;
};

EvalReport evaluate(std::span<const EvalSample> samples, const EvalOptions& options = {});

}  // namespace anoco
