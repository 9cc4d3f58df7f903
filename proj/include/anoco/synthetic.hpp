#pragma once

#include <cstdint>
#include <vector>

#include "anoco/types.hpp"

namespace anoco {

/// Multi-modal patch-feature benchmark. Normal images are 3 vertical stripes,
/// each drawn from one of `modes` prototype directions scaled to `mode_norm`.
/// Anomalous images carry a 2-3 x 2-3 patch block drawn off the manifold:
/// mostly normalized blends of two modes, otherwise a random direction.
struct SyntheticConfig {
  Index dim = 32;
  int modes = 3;
  double mode_norm = 16.0;
  double noise = 1.2;
  Index grid = 8;
  int reference_images = 2;
  int normal_queries = 200;
  int anomalous_queries = 200;
  double scale_min = 0.5;  // per-query image scale
  double scale_max = 1.5;
  double jitter = 0.1;     // per-patch scale in [1 - jitter, 1 + jitter]
  double blend_fraction = 0.8;
  Index patch_pixels = 8;  // image pixels per patch side
  std::uint64_t seed = 0;
};

struct SyntheticImage {
  FeatureGrid<float> features;
  std::uint8_t label = 0;
  BinaryMask patch_mask;  // grid resolution
};

struct SyntheticBenchmark {
  SyntheticConfig config;
  std::vector<FeatureGrid<float>> references;
  std::vector<SyntheticImage> queries;

  ReferencePool<float> pool() const;
  Index image_rows() const { return config.grid * config.patch_pixels; }
  Index image_cols() const { return image_rows(); }
};

SyntheticBenchmark make_synthetic(const SyntheticConfig& config);

/// Nearest-neighbour upscale of a patch-grid mask to image resolution.
BinaryMask upscale_mask(const BinaryMask& patch_mask, Index rows, Index cols);

}  // namespace anoco
