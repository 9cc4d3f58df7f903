#include <zlib.h>

#include <fstream>
#include <thread>

#include "anoco/metrics.hpp"
#include "anoco/pipeline.hpp"
#include "anoco/png.hpp"
#include "anoco/synthetic.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace anoco;
using fixtures::code_of;

namespace {

SyntheticConfig small_config(std::uint64_t seed = 0) {
  SyntheticConfig c;
  c.normal_queries = 12;
  c.anomalous_queries = 12;
  c.seed = seed;
  return c;
}

constexpr Method kMethods[] = {Method::Anoco,          Method::KnnL2,
                               Method::KnnMahalanobis, Method::GraphNonBipartite,
                               Method::GraphBipartiteNaive, Method::MessagePassing};

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("method names") {
    for (Method m : kMethods) CHECK(parse_method(to_string(m)) == m);
    CHECK(to_string(Method::Anoco) == "anoco");
    CHECK(to_string(Method::GraphBipartiteNaive) == "graph_bipartite_naive");
    CHECK(code_of([] { parse_method("knn"); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("synthetic benchmark shape and determinism") {
    const auto a = make_synthetic(small_config(3));
    const auto b = make_synthetic(small_config(3));
    const auto c = make_synthetic(small_config(4));
    REQUIRE(a.references.size() == 2);
    REQUIRE(a.queries.size() == 24);
    CHECK(a.pool().size() == 2 * 64);
    CHECK(a.image_rows() == 64);
    int anomalous = 0;
    for (std::size_t i = 0; i < a.queries.size(); ++i) {
      const auto& q = a.queries[i];
      q.features.validate();
      CHECK(q.features.height == 8);
      CHECK(q.features.dim() == 32);
      CHECK(q.features.data == b.queries[i].features.data);
      CHECK(q.patch_mask == b.queries[i].patch_mask);
      anomalous += q.label;
      const auto area = q.patch_mask.cast<int>().sum();
      if (q.label) {
        CHECK(area >= 4);
        CHECK(area <= 9);
      } else {
        CHECK(area == 0);
      }
    }
    CHECK(anomalous == 12);
    CHECK(a.queries[0].features.data != c.queries[0].features.data);
    CHECK(code_of([] {
            SyntheticConfig bad;
            bad.modes = 2;
            make_synthetic(bad);
          }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("mask upscaling") {
    BinaryMask m(2, 2);
    m << 1, 0, 0, 1;
    const BinaryMask up = upscale_mask(m, 4, 6);
    CHECK(up.topLeftCorner(2, 3).minCoeff() == 1);
    CHECK(up.topRightCorner(2, 3).maxCoeff() == 0);
    CHECK(up.bottomRightCorner(2, 3).minCoeff() == 1);
  }

  TEST_CASE("a query equal to a reference grid scores zero") {
    const auto bench = make_synthetic(small_config());
    const auto pool = bench.pool();
    for (Method m : {Method::Anoco, Method::MessagePassing, Method::KnnL2}) {
      const Scorer<float> scorer(pool, {.method = m});
      const auto out = scorer.score(bench.references[1], 64, 64);
      CHECK(out.image_score <= 1e-9);
    }
  }

  TEST_CASE("every method scores every patch") {
    const auto bench = make_synthetic(small_config(1));
    const auto pool = bench.pool();
    for (Method m : kMethods) {
      CAPTURE(to_string(m));
      const Scorer<float> scorer(pool, {.method = m, .knn_k = 2});
      const auto out = scorer.score(bench.queries[13].features, 64, 64);
      REQUIRE(out.patch_energies.size() == 64);
      CHECK(out.patch_energies.allFinite());
      CHECK(out.patch_energies.minCoeff() >= 0.0);
      CHECK(out.map.rows() == 64);
      CHECK(out.map.cols() == 64);
      CHECK(out.image_score == out.patch_energies.maxCoeff());
      CHECK(out.smoothed_score == out.map.maxCoeff());
      CHECK(out.image_id == bench.queries[13].features.image_id);
    }
  }

  TEST_CASE("scorer matches the stage-by-stage computation") {
    const auto bench = make_synthetic(small_config(2));
    const auto pool = bench.pool();
    const auto& q = bench.queries[5].features.data;
    const Scorer<float> anoco(pool, {.lambda = 0.5});
    const auto graph = edge_weights(q, pool.data, assign_all(q, PreparedPool<float>(pool)));
    const auto expected = patch_energies(q, anchored_update(q, pool.data, graph, {0.5, {}}));
    CHECK(anoco.patch_scores(q) == expected);

    const Scorer<float> knn(pool, {.method = Method::KnnL2, .knn_k = 3});
    CHECK(knn.patch_scores(q) == KnnScorer<float>(pool, KnnMetric::L2, 3).score_all(q));

    const Scorer<float> naive(pool, {.method = Method::GraphBipartiteNaive, .retrieval_k = 4});
    const auto g4 = edge_weights(q, pool.data, assign_top_k(q, PreparedPool<float>(pool), 4));
    CHECK(naive.patch_scores(q) == patch_energies(q, anchored_update(q, pool.data, g4, {})));
  }

  TEST_CASE("anomalous images outscore normal ones") {
    auto config = small_config(5);
    config.normal_queries = 30;
    config.anomalous_queries = 30;
    const auto bench = make_synthetic(config);
    const auto pool = bench.pool();
    const Scorer<float> scorer(pool, {});
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const auto& q : bench.queries) {
      scores.push_back(scorer.score(q.features, 64, 64).image_score);
      labels.push_back(q.label);
    }
    CHECK(auroc(scores, labels) > 0.9);
  }

  TEST_CASE("concurrent scoring is deterministic") {
    const auto bench = make_synthetic(small_config(6));
    const auto pool = bench.pool();
    const Scorer<float> scorer(pool, {});
    std::vector<Eigen::VectorXd> serial;
    for (const auto& q : bench.queries) serial.push_back(scorer.patch_scores(q.features.data));
    std::vector<Eigen::VectorXd> parallel(bench.queries.size());
    {
      std::vector<std::jthread> workers;
      for (std::size_t t = 0; t < 4; ++t) {
        workers.emplace_back([&, t] {
          for (std::size_t i = t; i < bench.queries.size(); i += 4) {
            parallel[i] = scorer.patch_scores(bench.queries[i].features.data);
          }
        });
      }
    }
    for (std::size_t i = 0; i < serial.size(); ++i) CHECK(parallel[i] == serial[i]);
  }

  TEST_CASE("scorer input errors") {
    const auto bench = make_synthetic(small_config());
    const auto pool = bench.pool();
    const Scorer<float> scorer(pool, {});
    CHECK(code_of([&] { scorer.patch_scores(FeatureMatrix<float>::Zero(3, 5)); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { scorer.patch_scores(FeatureMatrix<float>(0, 32)); }) == ErrorCode::EmptyInput);
    CHECK(code_of([&] { Scorer<float>(pool, {.lambda = 0.0}); }) == ErrorCode::NonPositiveLambda);
    CHECK(code_of([&] { Scorer<float>(pool, {.rounds = 0}); }) == ErrorCode::InvalidArgument);
    const ReferencePool<float> empty;
    CHECK(code_of([&] { Scorer<float>(empty, {}); }) == ErrorCode::EmptyPool);
    auto bad = bench.queries[0].features;
    bad.height = 7;
    CHECK(code_of([&] { scorer.score(bad, 64, 64); }) == ErrorCode::ShapeMismatch);
  }

  TEST_CASE("PNG encoding") {
    const std::uint8_t pixels[6] = {0, 50, 100, 150, 200, 255};
    const auto png = encode_png_gray8(pixels, 2, 3);
    const std::uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    REQUIRE(png.size() > 33);
    CHECK(std::equal(signature, signature + 8, png.begin()));
    CHECK(be32(&png[8]) == 13);
    CHECK(std::string(png.begin() + 12, png.begin() + 16) == "IHDR");
    CHECK(be32(&png[16]) == 3);
    CHECK(be32(&png[20]) == 2);
    CHECK(png[24] == 8);
    CHECK(png[25] == 0);
    CHECK(be32(&png[29]) == crc32(0, &png[12], 17));

    const std::uint32_t idat_len = be32(&png[33]);
    CHECK(std::string(png.begin() + 37, png.begin() + 41) == "IDAT");
    CHECK(be32(&png[41 + idat_len]) == crc32(0, &png[37], 4 + idat_len));
    std::vector<std::uint8_t> raw(8);
    uLongf raw_len = raw.size();
    REQUIRE(uncompress(raw.data(), &raw_len, &png[41], idat_len) == Z_OK);
    CHECK(raw_len == 8);
    CHECK(raw == std::vector<std::uint8_t>{0, 0, 50, 100, 0, 150, 200, 255});
    CHECK(std::string(png.end() - 8, png.end() - 4) == "IEND");

    const auto dir = fixtures::scratch_dir("png");
    ImageMap map(2, 2);
    map << -1, 0, 1, 3;
    const auto bounds = write_map_png(dir / "m.png", map);
    CHECK(bounds.min == -1.0);
    CHECK(bounds.max == 3.0);
    std::ifstream in(dir / "m.png", std::ios::binary);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
    const std::uint8_t expected[4] = {0, 64, 128, 255};
    const auto again = encode_png_gray8(expected, 2, 2);
    CHECK(bytes == again);
  }
}
