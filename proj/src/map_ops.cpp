#include "anoco/map_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anoco {

namespace {

Index reflect(Index i, Index n) {
  const Index period = 2 * n;
  Index m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

double sample_bilinear(const ImageMap& map, double y, double x) {
  const Index rows = map.rows(), cols = map.cols();
  y = std::clamp(y, 0.0, static_cast<double>(rows - 1));
  x = std::clamp(x, 0.0, static_cast<double>(cols - 1));
  const auto y0 = static_cast<Index>(std::floor(y));
  const auto x0 = static_cast<Index>(std::floor(x));
  const Index y1 = std::min(y0 + 1, rows - 1);
  const Index x1 = std::min(x0 + 1, cols - 1);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  return (1 - fy) * ((1 - fx) * map(y0, x0) + fx * map(y0, x1)) + fy * ((1 - fx) * map(y1, x0) + fx * map(y1, x1));
}

void check_resize(const ImageMap& grid, Index rows, Index cols) {
  require(grid.rows() >= 1 && grid.cols() >= 1, ErrorCode::ShapeMismatch, "cannot resize an empty map");
  require(rows >= 1 && cols >= 1, ErrorCode::ShapeMismatch, "target size must be positive");
}

}  // namespace

Eigen::VectorXd gaussian_kernel(int size, double sigma) {
  require(size >= 1 && size % 2 == 1, ErrorCode::InvalidArgument, "Gaussian kernel size must be odd and positive");
  require(sigma > 0.0, ErrorCode::InvalidArgument, "Gaussian sigma must be positive");
  const int r = size / 2;
  Eigen::VectorXd k(size);
  for (int t = -r; t <= r; ++t) k[t + r] = std::exp(-0.5 * t * t / (sigma * sigma));
  return k / k.sum();
}

ImageMap upsample_bilinear(const ImageMap& grid, Index rows, Index cols) {
  check_resize(grid, rows, cols);
  const double sy = static_cast<double>(grid.rows()) / static_cast<double>(rows);
  const double sx = static_cast<double>(grid.cols()) / static_cast<double>(cols);
  ImageMap out(rows, cols);
  for (Index y = 0; y < rows; ++y) {
    const double gy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    for (Index x = 0; x < cols; ++x) {
      out(y, x) = sample_bilinear(grid, gy, (static_cast<double>(x) + 0.5) * sx - 0.5);
    }
  }
  return out;
}

ImageMap upsample_nearest(const ImageMap& grid, Index rows, Index cols) {
  check_resize(grid, rows, cols);
  ImageMap out(rows, cols);
  for (Index y = 0; y < rows; ++y) {
    const Index gy = std::min(grid.rows() - 1, y * grid.rows() / rows);
    for (Index x = 0; x < cols; ++x) out(y, x) = grid(gy, std::min(grid.cols() - 1, x * grid.cols() / cols));
  }
  return out;
}

ImageMap gaussian_smooth(const ImageMap& map, int kernel_size, double sigma) {
  const Eigen::VectorXd k = gaussian_kernel(kernel_size, sigma);
  const Index r = kernel_size / 2, rows = map.rows(), cols = map.cols();
  ImageMap tmp(rows, cols), out(rows, cols);
  for (Index y = 0; y < rows; ++y) {
    for (Index x = 0; x < cols; ++x) {
      double acc = 0;
      for (Index t = -r; t <= r; ++t) acc += k[t + r] * map(y, reflect(x + t, cols));
      tmp(y, x) = acc;
    }
  }
  for (Index y = 0; y < rows; ++y) {
    for (Index x = 0; x < cols; ++x) {
      double acc = 0;
      for (Index t = -r; t <= r; ++t) acc += k[t + r] * tmp(reflect(y + t, rows), x);
      out(y, x) = acc;
    }
  }
  return out;
}

ImageMap assemble_map(const Eigen::VectorXd& patch_energies, Index grid_rows, Index grid_cols, Index rows,
                      Index cols, const MapOptions& options) {
  require(grid_rows >= 1 && grid_cols >= 1 && patch_energies.size() == grid_rows * grid_cols,
          ErrorCode::ShapeMismatch, "patch energies do not match the patch grid");
  require(rows >= grid_rows && cols >= grid_cols, ErrorCode::ShapeMismatch,
          "image size must be at least the patch grid size");
  const ImageMap grid = Eigen::Map<const ImageMap>(patch_energies.data(), grid_rows, grid_cols);
  ImageMap map = options.upsampling == Upsampling::Bilinear ? upsample_bilinear(grid, rows, cols)
                                                            : upsample_nearest(grid, rows, cols);
  if (options.smooth) map = gaussian_smooth(map, options.kernel_size, options.sigma);
  return map.cwiseMax(0.0);
}

double image_score(const Eigen::VectorXd& patch_energies) {
  require(patch_energies.size() > 0, ErrorCode::EmptyInput, "image_score: no patch energies");
  return patch_energies.maxCoeff();
}

WarpedView warp_to_original(const View& view, Index rows, Index cols) {
  require(view.map.rows() >= 1 && view.map.cols() >= 1, ErrorCode::ShapeMismatch, "view map is empty");
  constexpr double kEdge = 1e-9;
  const double max_x = static_cast<double>(view.map.cols() - 1) + kEdge;
  const double max_y = static_cast<double>(view.map.rows() - 1) + kEdge;
  WarpedView out{ImageMap::Zero(rows, cols), BinaryMask::Zero(rows, cols)};
  for (Index y = 0; y < rows; ++y) {
    for (Index x = 0; x < cols; ++x) {
      const Eigen::Vector2d p = view.view_from_original * Eigen::Vector3d(static_cast<double>(x), static_cast<double>(y), 1.0);
      if (p.x() < -kEdge || p.y() < -kEdge || p.x() > max_x || p.y() > max_y) continue;
      out.map(y, x) = sample_bilinear(view.map, p.y(), p.x());
      out.coverage(y, x) = 1;
    }
  }
  return out;
}

double view_entropy(const WarpedView& view) {
  double mass = 0;
  Index covered = 0;
  for (Index i = 0; i < view.map.size(); ++i) {
    if (!view.coverage.data()[i]) continue;
    ++covered;
    mass += std::max(0.0, view.map.data()[i]);
  }
  if (covered == 0) return 0.0;
  if (!(mass > 0.0)) return std::log(static_cast<double>(covered));
  double h = 0;
  for (Index i = 0; i < view.map.size(); ++i) {
    if (!view.coverage.data()[i]) continue;
    const double p = std::max(0.0, view.map.data()[i]) / mass;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> entropy_weights(std::span<const double> entropies) {
  require(!entropies.empty(), ErrorCode::NoViews, "no views to weight");
  const double lowest = *std::min_element(entropies.begin(), entropies.end());
  std::vector<double> w;
  w.reserve(entropies.size());
  for (double h : entropies) w.push_back(std::exp(-(h - lowest)));
  return w;
}

ImageMap fuse_views(std::span<const WarpedView> views, std::span<const double> weights) {
  require(!views.empty(), ErrorCode::NoViews, "no views to fuse");
  require(views.size() == weights.size(), ErrorCode::ShapeMismatch, "one weight per view required");
  const Index rows = views.front().map.rows(), cols = views.front().map.cols();
  ImageMap num = ImageMap::Zero(rows, cols), den = ImageMap::Zero(rows, cols);
  for (std::size_t v = 0; v < views.size(); ++v) {
    require(views[v].map.rows() == rows && views[v].map.cols() == cols, ErrorCode::ShapeMismatch,
            "warped views disagree on size");
    for (Index i = 0; i < num.size(); ++i) {
      if (!views[v].coverage.data()[i]) continue;
      num.data()[i] += weights[v] * views[v].map.data()[i];
      den.data()[i] += weights[v];
    }
  }
  for (Index i = 0; i < num.size(); ++i) num.data()[i] = den.data()[i] > 0 ? num.data()[i] / den.data()[i] : 0.0;
  return num;
}

ImageMap aggregate_views(std::span<const View> views, Index rows, Index cols, ViewWeighting weighting,
                         std::vector<double>* weights_out) {
  require(!views.empty(), ErrorCode::NoViews, "aggregate_views needs at least one view");
  std::vector<WarpedView> warped;
  warped.reserve(views.size());
  bool any_mass = false;
  for (const auto& v : views) {
    warped.push_back(warp_to_original(v, rows, cols));
    const auto& w = warped.back();
    for (Index i = 0; i < w.map.size() && !any_mass; ++i) any_mass = w.coverage.data()[i] && w.map.data()[i] > 0.0;
  }
  std::vector<double> weights(views.size(), 1.0);
  if (weighting == ViewWeighting::Entropy && any_mass) {
    std::vector<double> h;
    h.reserve(warped.size());
    for (const auto& w : warped) h.push_back(view_entropy(w));
    weights = entropy_weights(h);
  }
  if (weights_out) *weights_out = weights;
  return fuse_views(warped, weights);
}

}  // namespace anoco
