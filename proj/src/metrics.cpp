#include "anoco/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace anoco {

namespace {

struct Scored {
  double score;
  std::uint8_t label;
};

std::vector<Scored> descending(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), ErrorCode::ShapeMismatch, "scores and labels differ in length");
  std::vector<Scored> v(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(std::isfinite(scores[i]), ErrorCode::NonFiniteScalar, "score is NaN or Inf");
    require(labels[i] <= 1, ErrorCode::InvalidArgument, "labels must be 0 or 1");
    v[i] = {scores[i], labels[i]};
  }
  std::sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  return v;
}

std::size_t count_positives(std::span<const std::uint8_t> labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

// Calls visit(tp, fp) once per distinct threshold, highest first.
template <typename Visit>
void sweep_thresholds(const std::vector<Scored>& sorted, Visit visit) {
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == t; ++i) (sorted[i].label ? tp : fp) += 1;
    visit(tp, fp);
  }
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  auto sorted = descending(scores, labels);
  const std::size_t pos = count_positives(labels), neg = labels.size() - pos;
  require(pos > 0 && neg > 0, ErrorCode::SingleClass, "AUROC needs both normal and anomalous samples");
  // Ascending ranks, tied blocks sharing their mean rank.
  std::reverse(sorted.begin(), sorted.end());
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t block_pos = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) block_pos += sorted[j++].label;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += mean_rank * static_cast<double>(block_pos);
    i = j;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double aupr(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto sorted = descending(scores, labels);
  const std::size_t pos = count_positives(labels);
  require(pos > 0, ErrorCode::NoPositives, "AUPR needs at least one anomalous sample");
  double area = 0.0, prev_recall = 0.0;
  sweep_thresholds(sorted, [&](std::size_t tp, std::size_t fp) {
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  });
  return area;
}

double f1_max(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto sorted = descending(scores, labels);
  const std::size_t pos = count_positives(labels);
  require(pos > 0, ErrorCode::NoPositives, "F1-max needs at least one anomalous sample");
  double best = 0.0;
  sweep_thresholds(sorted, [&](std::size_t tp, std::size_t fp) {
    if (tp == 0) return;
    // 2PR/(P+R) simplified to counts.
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + pos);
    best = std::max(best, f1);
  });
  return best;
}

Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label_components(const BinaryMask& mask,
                                                                                     int* count) {
  const Index rows = mask.rows(), cols = mask.cols();
  std::vector<int> parent;
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> provisional(rows, cols);
  provisional.setConstant(-1);
  for (Index y = 0; y < rows; ++y) {
    for (Index x = 0; x < cols; ++x) {
      if (!mask(y, x)) continue;
      int label = -1;
      // Already-visited 8-neighbours: W, NW, N, NE.
      const Index ny[4] = {y, y - 1, y - 1, y - 1};
      const Index nx[4] = {x - 1, x - 1, x, x + 1};
      for (int t = 0; t < 4; ++t) {
        if (ny[t] < 0 || nx[t] < 0 || nx[t] >= cols) continue;
        const int other = provisional(ny[t], nx[t]);
        if (other < 0) continue;
        if (label < 0) {
          label = find(other);
        } else {
          const int a = find(label), b = find(other);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
          label = std::min(a, b);
        }
      }
      if (label < 0) {
        label = static_cast<int>(parent.size());
        parent.push_back(label);
      }
      provisional(y, x) = label;
    }
  }
  // Roots are the smallest provisional label of each set, so numbering roots
  // in increasing order is raster order of first pixels.
  std::vector<int> final_label(parent.size(), -1);
  int next = 0;
  for (std::size_t l = 0; l < parent.size(); ++l) {
    if (find(static_cast<int>(l)) == static_cast<int>(l)) final_label[l] = next++;
  }
  for (Index y = 0; y < rows; ++y) {
    for (Index x = 0; x < cols; ++x) {
      if (provisional(y, x) >= 0) provisional(y, x) = final_label[find(provisional(y, x))];
    }
  }
  if (count) *count = next;
  return provisional;
}

std::vector<double> quantile_thresholds(std::vector<double> values, int levels) {
  require(levels >= 2, ErrorCode::InvalidArgument, "need at least 2 quantile levels");
  require(!values.empty(), ErrorCode::EmptyInput, "no values to take quantiles of");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<long long>(values.size());
  std::vector<double> out(static_cast<std::size_t>(levels));
  for (long long k = 0; k < levels; ++k) out[k] = values[(k * (n - 1)) / (levels - 1)];
  return out;
}

double trapezoid_area(std::span<const double> x, std::span<const double> y, double limit) {
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double x0 = x[i - 1], x1 = x[i];
    if (x0 >= limit) return area;
    if (x1 > limit) {
      const double y_at = y[i - 1] + (y[i] - y[i - 1]) * (limit - x0) / (x1 - x0);
      return area + 0.5 * (y[i - 1] + y_at) * (limit - x0);
    }
    area += 0.5 * (y[i - 1] + y[i]) * (x1 - x0);
  }
  if (!x.empty() && x.back() < limit) area += y.back() * (limit - x.back());
  return area;
}

double pro(std::span<const ImageMap> maps, std::span<const BinaryMask> masks, const ProOptions& options) {
  require(maps.size() == masks.size(), ErrorCode::ShapeMismatch, "PRO: map and mask counts differ");
  require(options.fpr_limit > 0.0 && options.fpr_limit <= 1.0, ErrorCode::InvalidArgument,
          "PRO: fpr_limit must be in (0, 1]");
  std::vector<double> pooled, normal;
  std::vector<std::vector<double>> regions;  // sorted values per ground-truth component
  for (std::size_t m = 0; m < maps.size(); ++m) {
    const ImageMap& map = maps[m];
    const BinaryMask& mask = masks[m];
    require(map.rows() == mask.rows() && map.cols() == mask.cols(), ErrorCode::ShapeMismatch,
            "PRO: map and mask sizes differ");
    int count = 0;
    const auto labels = label_components(mask, &count);
    const std::size_t base = regions.size();
    regions.resize(base + static_cast<std::size_t>(count));
    for (Index y = 0; y < map.rows(); ++y) {
      for (Index x = 0; x < map.cols(); ++x) {
        const double v = map(y, x);
        require(std::isfinite(v), ErrorCode::NonFiniteScalar, "PRO: map contains NaN or Inf");
        pooled.push_back(v);
        if (labels(y, x) < 0) {
          normal.push_back(v);
        } else {
          regions[base + static_cast<std::size_t>(labels(y, x))].push_back(v);
        }
      }
    }
  }
  require(!regions.empty(), ErrorCode::NoAnomalousPixels, "PRO needs at least one anomalous region");
  for (auto& r : regions) std::sort(r.begin(), r.end());
  std::sort(normal.begin(), normal.end());

  auto at_or_above = [](const std::vector<double>& sorted, double t) {
    return static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
  };
  std::vector<std::pair<double, double>> curve{{0.0, 0.0}};
  for (double t : quantile_thresholds(std::move(pooled), options.levels)) {
    const double fpr = normal.empty() ? 0.0 : at_or_above(normal, t) / static_cast<double>(normal.size());
    double overlap = 0.0;
    for (const auto& r : regions) overlap += at_or_above(r, t) / static_cast<double>(r.size());
    curve.emplace_back(fpr, overlap / static_cast<double>(regions.size()));
  }
  std::sort(curve.begin(), curve.end());
  std::vector<double> xs, ys;
  for (const auto& [x, y] : curve) {
    xs.push_back(x);
    ys.push_back(y);
  }
  return trapezoid_area(xs, ys, options.fpr_limit) / options.fpr_limit;
}

namespace {

ImageMap min_max_normalized(const ImageMap& map) {
  const double lo = map.minCoeff(), hi = map.maxCoeff();
  if (!(hi > lo)) return ImageMap::Zero(map.rows(), map.cols());
  return (map.array() - lo) / (hi - lo);
}

}  // namespace

EvalReport evaluate(std::span<const EvalSample> samples, const EvalOptions& options) {
  require(!samples.empty(), ErrorCode::EmptyInput, "no samples to evaluate");
  EvalReport report;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  bool any_map = false, all_maps = true;
  for (const auto& s : samples) {
    scores.push_back(s.image_score);
    labels.push_back(s.label);
    require(s.map.has_value() == s.mask.has_value() || !s.map, ErrorCode::MissingMask,
            "image '" + s.image_id + "' has a map but no mask");
    any_map |= s.map.has_value();
    all_maps &= s.map.has_value();
  }
  report.images = samples.size();
  report.anomalous = count_positives(labels);
  report.image_auroc = auroc(scores, labels);
  report.image_aupr = aupr(scores, labels);
  report.image_f1_max = f1_max(scores, labels);

  if (!options.pixel_metrics || !any_map) return report;
  require(all_maps, ErrorCode::MissingMask, "pixel metrics need a map and a mask for every image");
  std::vector<ImageMap> maps;
  std::vector<BinaryMask> masks;
  std::vector<double> pixels;
  std::vector<std::uint8_t> pixel_labels;
  for (const auto& s : samples) {
    require(s.map->rows() == s.mask->rows() && s.map->cols() == s.mask->cols(), ErrorCode::ShapeMismatch,
            "image '" + s.image_id + "': map and mask sizes differ");
    maps.push_back(options.normalize_maps ? min_max_normalized(*s.map) : *s.map);
    masks.push_back(*s.mask);
    const ImageMap& m = maps.back();
    for (Index i = 0; i < m.size(); ++i) {
      pixels.push_back(m.data()[i]);
      pixel_labels.push_back(s.mask->data()[i]);
    }
  }
  report.pixel_auroc = auroc(pixels, pixel_labels);
  report.pixel_f1_max = f1_max(pixels, pixel_labels);
  report.pixel_pro = pro(maps, masks, options.pro);
  return report;
}

}  // namespace anoco
