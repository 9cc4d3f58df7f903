#include "anoco/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <random>

namespace anoco {

namespace {

using Rng = std::mt19937_64;

Eigen::VectorXd random_direction(Rng& rng, Index d) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(d);
  for (Index k = 0; k < d; ++k) v[k] = normal(rng);
  return v / std::max(v.norm(), 1e-12);
}

Index uniform_index(Rng& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

class Generator {
 public:
  explicit Generator(const SyntheticConfig& config) : c_(config), rng_(config.seed) {
    require(c_.dim >= 1 && c_.modes >= 3 && c_.grid >= 3, ErrorCode::InvalidArgument,
            "synthetic benchmark needs dim >= 1, at least 3 modes and a grid of at least 3");
    require(c_.reference_images >= 1, ErrorCode::InvalidArgument, "synthetic benchmark needs a reference image");
    for (int m = 0; m < c_.modes; ++m) modes_.push_back(random_direction(rng_, c_.dim) * c_.mode_norm);
  }

  FeatureGrid<float> normal_image(double scale, const std::string& id) {
    const Index g = c_.grid;
    // Column stripes at two distinct random cuts, modes in random order.
    std::vector<Index> cut_choices(static_cast<std::size_t>(g - 1));
    std::iota(cut_choices.begin(), cut_choices.end(), Index{1});
    std::shuffle(cut_choices.begin(), cut_choices.end(), rng_);
    std::array<Index, 2> cuts{cut_choices[0], cut_choices[1]};
    std::sort(cuts.begin(), cuts.end());
    std::vector<int> order(static_cast<std::size_t>(c_.modes));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);

    std::normal_distribution<double> noise(0.0, c_.noise);
    std::uniform_real_distribution<double> jitter(1.0 - c_.jitter, 1.0 + c_.jitter);
    FeatureGrid<float> grid;
    grid.height = g;
    grid.width = g;
    grid.image_id = id;
    grid.data.resize(g * g, c_.dim);
    for (Index r = 0; r < g; ++r) {
      for (Index col = 0; col < g; ++col) {
        const int mode = order[col < cuts[0] ? 0 : col < cuts[1] ? 1 : 2];
        Eigen::VectorXd f = modes_[static_cast<std::size_t>(mode)];
        for (Index k = 0; k < c_.dim; ++k) f[k] += noise(rng_);
        grid.data.row(r * g + col) = (scale * jitter(rng_) * f).cast<float>().transpose();
      }
    }
    return grid;
  }

  SyntheticImage anomalous_image(double scale, const std::string& id) {
    SyntheticImage img;
    img.features = normal_image(scale, id);
    img.label = 1;
    const Index g = c_.grid;
    const Index h = uniform_index(rng_, 2, 3), w = uniform_index(rng_, 2, 3);
    const Index r0 = uniform_index(rng_, 0, g - h), c0 = uniform_index(rng_, 0, g - w);

    Eigen::VectorXd centre;
    if (std::uniform_real_distribution<double>()(rng_) < c_.blend_fraction) {
      std::vector<int> pick(static_cast<std::size_t>(c_.modes));
      std::iota(pick.begin(), pick.end(), 0);
      std::shuffle(pick.begin(), pick.end(), rng_);
      const double beta = std::uniform_real_distribution<double>(0.4, 0.6)(rng_);
      centre = beta * modes_[pick[0]] + (1.0 - beta) * modes_[pick[1]];
      centre *= c_.mode_norm / std::max(centre.norm(), 1e-12);
    } else {
      centre = random_direction(rng_, c_.dim) * c_.mode_norm;
    }

    std::normal_distribution<double> noise(0.0, c_.noise);
    img.patch_mask = BinaryMask::Zero(g, g);
    for (Index r = r0; r < r0 + h; ++r) {
      for (Index col = c0; col < c0 + w; ++col) {
        Eigen::VectorXd f = centre;
        for (Index k = 0; k < c_.dim; ++k) f[k] += noise(rng_);
        img.features.data.row(r * g + col) = (scale * f).cast<float>().transpose();
        img.patch_mask(r, col) = 1;
      }
    }
    return img;
  }

  double query_scale() { return std::uniform_real_distribution<double>(c_.scale_min, c_.scale_max)(rng_); }

 private:
  SyntheticConfig c_;
  Rng rng_;
  std::vector<Eigen::VectorXd> modes_;
};

std::string numbered(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d", prefix, n);
  return buf;
}

}  // namespace

ReferencePool<float> SyntheticBenchmark::pool() const {
  ReferencePool<float> out;
  Index rows = 0;
  for (const auto& r : references) rows += r.size();
  out.data.resize(rows, config.dim);
  Index at = 0;
  for (const auto& r : references) {
    out.data.middleRows(at, r.size()) = r.data;
    out.source_ids.insert(out.source_ids.end(), static_cast<std::size_t>(r.size()), r.image_id);
    at += r.size();
  }
  return out;
}

SyntheticBenchmark make_synthetic(const SyntheticConfig& config) {
  Generator gen(config);
  SyntheticBenchmark bench;
  bench.config = config;
  for (int r = 0; r < config.reference_images; ++r) bench.references.push_back(gen.normal_image(1.0, numbered("ref", r)));
  int id = 0;
  for (int n = 0; n < config.normal_queries; ++n) {
    SyntheticImage img;
    img.features = gen.normal_image(gen.query_scale(), numbered("img", id++));
    img.patch_mask = BinaryMask::Zero(config.grid, config.grid);
    bench.queries.push_back(std::move(img));
  }
  for (int n = 0; n < config.anomalous_queries; ++n) {
    const double scale = gen.query_scale();
    bench.queries.push_back(gen.anomalous_image(scale, numbered("img", id++)));
  }
  return bench;
}

BinaryMask upscale_mask(const BinaryMask& patch_mask, Index rows, Index cols) {
  require(patch_mask.rows() >= 1 && patch_mask.cols() >= 1, ErrorCode::ShapeMismatch, "empty patch mask");
  BinaryMask out(rows, cols);
  for (Index y = 0; y < rows; ++y) {
    for (Index x = 0; x < cols; ++x) out(y, x) = patch_mask(y * patch_mask.rows() / rows, x * patch_mask.cols() / cols);
  }
  return out;
}

}  // namespace anoco
