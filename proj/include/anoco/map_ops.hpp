#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "anoco/types.hpp"

namespace anoco {

enum class Upsampling { Bilinear, Nearest };

struct MapOptions {
  bool smooth = true;
  int kernel_size = 7;
  double sigma = 0.8;
  Upsampling upsampling = Upsampling::Bilinear;
};

/// Normalized 1-D Gaussian taps, odd size.
Eigen::VectorXd gaussian_kernel(int size, double sigma);

/// Half-pixel-centre bilinear resize (align_corners = false), edge-clamped.
ImageMap upsample_bilinear(const ImageMap& grid, Index rows, Index cols);
ImageMap upsample_nearest(const ImageMap& grid, Index rows, Index cols);

/// Separable Gaussian blur with symmetric reflect padding (... c b a | a b c ...).
ImageMap gaussian_smooth(const ImageMap& map, int kernel_size, double sigma);

/// Patch energies (row-major over the grid) -> image-resolution map.
ImageMap assemble_map(const Eigen::VectorXd& patch_energies, Index grid_rows, Index grid_cols, Index rows,
                      Index cols, const MapOptions& options = {});

/// Max over raw patch energies.
double image_score(const Eigen::VectorXd& patch_energies);

/// Anomaly map of one augmented view plus the affine map taking original
/// image pixel coordinates (x = column, y = row) to that view's coordinates.
struct View {
  ImageMap map;
  Eigen::Matrix<double, 2, 3> view_from_original = (Eigen::Matrix<double, 2, 3>() << 1, 0, 0, 0, 1, 0).finished();
};

enum class ViewWeighting { Entropy, Uniform };

/// Warp of a view back to original coordinates. coverage(y, x) = 1 where the
/// sample point falls inside the view frame.
struct WarpedView {
  ImageMap map;
  BinaryMask coverage;
};

WarpedView warp_to_original(const View& view, Index rows, Index cols);

/// Shannon entropy (nats) of the covered part of a map normalized to sum 1.
/// A map with zero covered mass is reported at the maximum, log(#covered).
double view_entropy(const WarpedView& view);

/// Per-view weights exp(-H_v), rescaled so the largest is 1.
std::vector<double> entropy_weights(std::span<const double> entropies);

/// Per-pixel weighted mean over the views covering each pixel. Pixels no view
/// covers are 0.
ImageMap fuse_views(std::span<const WarpedView> views, std::span<const double> weights);

/// Warp every view back, weight (entropy or uniform) and fuse. Falls back to
/// uniform weights when every view is all zero.
ImageMap aggregate_views(std::span<const View> views, Index rows, Index cols,
                         ViewWeighting weighting = ViewWeighting::Entropy,
                         std::vector<double>* weights_out = nullptr);

}  // namespace anoco
