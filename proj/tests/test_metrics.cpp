#include <cmath>
#include <random>

#include "anoco/metrics.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace anoco;
using fixtures::code_of;

namespace {

using Labels = std::vector<std::uint8_t>;

struct Sample {
  std::vector<double> scores;
  Labels labels;
};

/// Scores drawn from a small integer range so ties are common.
Sample random_sample(std::mt19937_64& rng, std::size_t n) {
  Sample s;
  std::uniform_int_distribution<int> value(0, 9), label(0, 1);
  while (true) {
    s.scores.clear();
    s.labels.clear();
    for (std::size_t i = 0; i < n; ++i) {
      s.labels.push_back(static_cast<std::uint8_t>(label(rng)));
      s.scores.push_back(static_cast<double>(value(rng) + 3 * s.labels.back()));
    }
    const auto pos = std::count(s.labels.begin(), s.labels.end(), 1);
    if (pos > 0 && pos < static_cast<long>(n)) return s;
  }
}

BinaryMask random_blobs(std::mt19937_64& rng, Index rows, Index cols, int blobs) {
  BinaryMask m = BinaryMask::Zero(rows, cols);
  std::uniform_int_distribution<Index> y(0, rows - 1), x(0, cols - 1), size(1, 5);
  for (int b = 0; b < blobs; ++b) {
    const Index y0 = y(rng), x0 = x(rng);
    m.block(y0, x0, std::min(size(rng), rows - y0), std::min(size(rng), cols - x0)).setOnes();
  }
  return m;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("worked examples") {
    CHECK(auroc(std::vector<double>{0.1, 0.9}, Labels{0, 1}) == 1.0);
    CHECK(auroc(std::vector<double>{0.5, 0.5}, Labels{0, 1}) == 0.5);
    CHECK(auroc(std::vector<double>{1, 2, 3, 4}, Labels{0, 1, 0, 1}) == doctest::Approx(0.75));
    CHECK(aupr(std::vector<double>{0.1, 0.9}, Labels{0, 1}) == 1.0);
    CHECK(aupr(std::vector<double>{0.9, 0.1}, Labels{0, 1}) == doctest::Approx(0.5));
    CHECK(aupr(std::vector<double>{2, 2, 2, 2}, Labels{0, 1, 1, 0}) == doctest::Approx(0.5));
    CHECK(f1_max(std::vector<double>{0.1, 0.9}, Labels{0, 1}) == 1.0);
    CHECK(f1_max(std::vector<double>{0.3, 0.1, 0.7}, Labels{1, 1, 1}) == 1.0);
    CHECK(f1_max(std::vector<double>{3, 2, 1}, Labels{1, 0, 1}) == doctest::Approx(0.8));
  }

  TEST_CASE("metric errors") {
    CHECK(code_of([] { auroc(std::vector<double>{1, 2}, Labels{0, 0}); }) == ErrorCode::SingleClass);
    CHECK(code_of([] { auroc(std::vector<double>{1, 2}, Labels{1, 1}); }) == ErrorCode::SingleClass);
    CHECK(code_of([] { aupr(std::vector<double>{1, 2}, Labels{0, 0}); }) == ErrorCode::NoPositives);
    CHECK(code_of([] { f1_max(std::vector<double>{1, 2}, Labels{0, 0}); }) == ErrorCode::NoPositives);
    CHECK(code_of([] { auroc(std::vector<double>{1}, Labels{0, 1}); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([] { auroc(std::vector<double>{NAN, 1}, Labels{0, 1}); }) == ErrorCode::NonFiniteScalar);
    const std::vector<ImageMap> maps{ImageMap::Zero(3, 3)};
    const std::vector<BinaryMask> masks{BinaryMask::Zero(3, 3)};
    CHECK(code_of([&] { pro(maps, masks); }) == ErrorCode::NoAnomalousPixels);
  }

  TEST_CASE("metrics agree with brute force") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
      const auto s = random_sample(rng, 2 + trial % 63);
      CHECK(std::abs(auroc(s.scores, s.labels) - oracle::auroc_pairs(s.scores, s.labels)) <= 1e-9);
      CHECK(std::abs(aupr(s.scores, s.labels) - oracle::aupr_scan(s.scores, s.labels)) <= 1e-9);
      CHECK(std::abs(f1_max(s.scores, s.labels) - oracle::f1_scan(s.scores, s.labels)) <= 1e-9);
    }
  }

  TEST_CASE("metric invariants") {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const auto s = random_sample(rng, 40);
      std::vector<double> warped, negated, distinct;
      for (double v : s.scores) warped.push_back(std::exp(0.5 * v) - 7.0);
      for (double v : s.scores) distinct.push_back(v + 1e-3 * noise(rng));
      for (double v : distinct) negated.push_back(-v);
      CHECK(auroc(warped, s.labels) == auroc(s.scores, s.labels));
      CHECK(aupr(warped, s.labels) == aupr(s.scores, s.labels));
      CHECK(f1_max(warped, s.labels) == f1_max(s.scores, s.labels));
      CHECK(auroc(distinct, s.labels) + auroc(negated, s.labels) == doctest::Approx(1.0));

      const double p = static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 1)) / 40.0;
      CHECK(f1_max(s.scores, s.labels) >= 2.0 * p / (1.0 + p) - 1e-12);
      const double ap = aupr(s.scores, s.labels);
      CHECK(ap >= p - 1e-12);
      CHECK(ap <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("connected components") {
    BinaryMask m(4, 5);
    m << 1, 0, 0, 1, 1,
         0, 1, 0, 0, 0,
         0, 0, 0, 0, 1,
         1, 1, 0, 1, 0;
    int count = 0;
    const auto labels = label_components(m, &count);
    CHECK(count == 4);
    CHECK(labels(0, 0) == 0);
    CHECK(labels(1, 1) == 0);
    CHECK(labels(0, 3) == 1);
    CHECK(labels(2, 4) == 2);
    CHECK(labels(3, 3) == 2);
    CHECK(labels(3, 0) == 3);
    CHECK(labels(0, 1) == -1);

    // U shape: the two arms meet only at the bottom.
    BinaryMask u(3, 3);
    u << 1, 0, 1, 1, 0, 1, 1, 1, 1;
    label_components(u, &count);
    CHECK(count == 1);

    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
      const BinaryMask r = random_blobs(rng, 12, 15, 6);
      const auto lab = label_components(r, &count);
      const auto regions = oracle::regions_bfs(r);
      REQUIRE(count == static_cast<int>(regions.size()));
      for (std::size_t k = 0; k < regions.size(); ++k) {
        for (const auto& [y, x] : regions[k]) CHECK(lab(y, x) == static_cast<int>(k));
      }
      CHECK((lab.array() >= 0).count() == (r.array() != 0).count());
    }
  }

  TEST_CASE("trapezoid integration") {
    const std::vector<double> x{0.0, 0.1, 0.5}, y{0.0, 1.0, 1.0};
    CHECK(trapezoid_area(x, y, 0.3) == doctest::Approx(0.05 + 0.2));
    CHECK(trapezoid_area(x, y, 0.05) == doctest::Approx(0.0125));
    const std::vector<double> short_x{0.0, 0.1}, short_y{0.0, 0.5};
    CHECK(trapezoid_area(short_x, short_y, 0.3) == doctest::Approx(0.025 + 0.1));
    CHECK(quantile_thresholds({4, 1, 3, 2, 0}, 3) == std::vector<double>{0, 2, 4});
  }

  TEST_CASE("PRO extremes") {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 20; ++trial) {
      BinaryMask mask = random_blobs(rng, 32, 32, 4);
      if (mask.sum() == 0) mask(0, 0) = 1;
      const std::vector<BinaryMask> masks{mask};
      const std::vector<ImageMap> exact{mask.cast<double>()};
      const std::vector<ImageMap> inverted{(1.0 - mask.cast<double>().array()).matrix()};
      CHECK(pro(exact, masks) == doctest::Approx(1.0));
      CHECK(pro(inverted, masks) <= 1.0 / 200.0);
    }
  }

  TEST_CASE("PRO agrees with a direct scan") {
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
      const Index side = trial % 2 ? 16 : 32;
      std::vector<ImageMap> maps;
      std::vector<BinaryMask> masks;
      for (int img = 0; img < 1 + trial % 3; ++img) {
        masks.push_back(random_blobs(rng, side, side, 3));
        ImageMap m(side, side);
        for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng) + 0.5 * masks.back().data()[i];
        if (trial % 4 == 0) m = (10.0 * m.array()).round() / 10.0;
        maps.push_back(m);
      }
      if (std::all_of(masks.begin(), masks.end(), [](const BinaryMask& m) { return m.sum() == 0; })) continue;
      const double got = pro(maps, masks);
      CHECK(std::abs(got - oracle::pro_scan(maps, masks, oracle::quantile_grid(maps, 200), 0.3)) <= 1e-9);

      std::vector<double> all;
      for (const auto& m : maps) all.insert(all.end(), m.data(), m.data() + m.size());
      if (side == 16 && maps.size() == 1) {
        CHECK(std::abs(got - oracle::pro_scan(maps, masks, oracle::distinct_descending(all), 0.3)) <= 0.02);
      }

      std::vector<ImageMap> warped;
      for (const auto& m : maps) warped.push_back((m.array() * 5.0).exp().matrix());
      CHECK(pro(warped, masks) == doctest::Approx(got).epsilon(1e-12));
    }
  }

  TEST_CASE("evaluation") {
    std::vector<EvalSample> samples;
    for (int i = 0; i < 6; ++i) {
      EvalSample s;
      s.image_id = "img" + std::to_string(i);
      s.label = i % 2;
      s.image_score = i % 2 ? 2.0 + i : 1.0 - 0.1 * i;
      BinaryMask mask = BinaryMask::Zero(8, 8);
      if (s.label) mask.block(2, 2, 3, 3).setOnes();
      s.map = (mask.cast<double>().array() * 4.0 + 0.5).matrix();
      s.mask = mask;
      samples.push_back(s);
    }
    const auto r = evaluate(samples);
    CHECK(r.images == 6);
    CHECK(r.anomalous == 3);
    CHECK(r.image_auroc == 1.0);
    CHECK(r.image_aupr == 1.0);
    CHECK(r.image_f1_max == 1.0);
    REQUIRE(r.pixel_auroc);
    CHECK(*r.pixel_auroc == 1.0);
    CHECK(*r.pixel_f1_max == 1.0);
    CHECK(*r.pixel_pro == doctest::Approx(1.0));

    EvalOptions no_pixels;
    no_pixels.pixel_metrics = false;
    CHECK_FALSE(evaluate(samples, no_pixels).pixel_auroc);
    EvalOptions per_image;
    per_image.normalize_maps = true;
    const auto normalized = evaluate(samples, per_image);
    CHECK(*normalized.pixel_auroc == 1.0);

    auto missing = samples;
    missing[1].mask.reset();
    CHECK(code_of([&] { evaluate(missing); }) == ErrorCode::MissingMask);
    auto partial = samples;
    partial[2].map.reset();
    partial[2].mask.reset();
    CHECK(code_of([&] { evaluate(partial); }) == ErrorCode::MissingMask);

    auto one_class = samples;
    for (auto& s : one_class) s.label = 0;
    CHECK(code_of([&] { evaluate(one_class); }) == ErrorCode::SingleClass);
    CHECK(code_of([] { evaluate(std::vector<EvalSample>{}); }) == ErrorCode::EmptyInput);
  }
}
