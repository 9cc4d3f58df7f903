#include <algorithm>
#include <numeric>

#include "anoco/baselines.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using fixtures::code_of;

using namespace anoco;

namespace {

ReferencePool<double> pool_of(const FeatureMatrix<double>& rows) { return {rows, {}}; }

BipartiteGraph<double> anchored_graph(const FeatureMatrix<double>& q, const FeatureMatrix<double>& r) {
  return edge_weights(q, r, assign_all(q, PreparedPool<double>(pool_of(r))));
}

/// Dense intra-query weights: each query's k most cosine-similar others,
/// symmetrized by union.
oracle::Mat dense_intra(const oracle::Mat& q, Index k) {
  const Index n = q.rows();
  oracle::Mat w = oracle::Mat::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    std::vector<Index> order;
    for (Index b = 0; b < n; ++b) {
      if (b != a) order.push_back(b);
    }
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
      return oracle::cosine(q, a, q, x) > oracle::cosine(q, a, q, y);
    });
    for (Index t = 0; t < std::min<Index>(k, static_cast<Index>(order.size())); ++t) {
      const Index b = order[static_cast<std::size_t>(t)];
      const double na = q.row(a).norm(), nb = q.row(b).norm();
      const double s = std::max(0.0, static_cast<double>(oracle::cosine(q, a, q, b)));
      w(a, b) = w(b, a) = s * 2.0 * na * nb / (na + nb);
    }
  }
  return w;
}

oracle::Mat dense_nonbipartite(const oracle::Mat& q, const oracle::Mat& r, const oracle::Mat& w_qr,
                               const oracle::Mat& w_qq, double lambda) {
  oracle::Mat a = -w_qq;
  a.diagonal() = oracle::Vec::Constant(q.rows(), lambda) + w_qr.rowwise().sum() + w_qq.rowwise().sum();
  const oracle::Mat rhs = lambda * q + w_qr * r;
  return a.fullPivLu().solve(rhs);
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("k-NN worked examples") {
    FeatureMatrix<double> pool(2, 2);
    pool << 1, 0, 0, 0;
    CHECK(knn_score(Eigen::RowVector2d(1, 0), pool_of(pool), KnnMetric::L2, 1) == 0.0);
    CHECK(knn_score(Eigen::RowVector2d(3, 0), pool_of(pool), KnnMetric::L2, 2) == doctest::Approx(2.5));
    CHECK(knn_score(Eigen::RowVector2d(3, 0), pool_of(pool), KnnMetric::L2, 1) == doctest::Approx(2.0));

    CHECK(code_of([&] { KnnScorer<double>(pool_of(pool), KnnMetric::L2, 3); }) == ErrorCode::PoolTooSmall);
    CHECK(code_of([&] { KnnScorer<double>(pool_of(pool), KnnMetric::L2, 0); }) == ErrorCode::InvalidArgument);
    const FeatureMatrix<double> one = pool.topRows(1);
    CHECK(code_of([&] { KnnScorer<double>(pool_of(one), KnnMetric::Mahalanobis, 1); }) == ErrorCode::PoolTooSmall);
    const KnnScorer<double> l2(pool_of(pool), KnnMetric::L2, 1);
    CHECK(code_of([&] { l2.score_all(FeatureMatrix<double>::Zero(1, 3)); }) == ErrorCode::DimensionMismatch);
  }

  TEST_CASE("Mahalanobis on a whitened pool is scaled L2") {
    std::mt19937_64 rng(8);
    FeatureMatrix<double> raw = fixtures::gaussian(rng, 60, 5);
    raw.rowwise() -= raw.colwise().mean();
    const Eigen::MatrixXd cov = raw.transpose() * raw / 59.0;
    const Eigen::MatrixXd inv_l = cov.llt().matrixL().solve(Eigen::MatrixXd::Identity(5, 5));
    const FeatureMatrix<double> pool = raw * inv_l.transpose();
    const double shrinkage = 1e-2;
    const FeatureMatrix<double> q = fixtures::gaussian(rng, 20, 5);
    const auto l2 = KnnScorer<double>(pool_of(pool), KnnMetric::L2, 3).score_all(q);
    const auto mah = KnnScorer<double>(pool_of(pool), KnnMetric::Mahalanobis, 3, shrinkage).score_all(q);
    for (Index i = 0; i < q.rows(); ++i) CHECK(std::abs(mah[i] * std::sqrt(1.0 + shrinkage) - l2[i]) <= 1e-5);
  }

  TEST_CASE("k-NN distances are translation invariant") {
    std::mt19937_64 rng(9);
    const FeatureMatrix<double> pool = fixtures::gaussian(rng, 30, 4);
    const FeatureMatrix<double> q = fixtures::gaussian(rng, 10, 4);
    const Eigen::RowVectorXd shift = fixtures::gaussian(rng, 1, 4, 5.0);
    const FeatureMatrix<double> pool_s = pool.rowwise() + shift, q_s = q.rowwise() + shift;
    for (auto metric : {KnnMetric::L2, KnnMetric::Mahalanobis}) {
      const auto a = KnnScorer<double>(pool_of(pool), metric, 2).score_all(q);
      const auto b = KnnScorer<double>(pool_of(pool_s), metric, 2).score_all(q_s);
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  TEST_CASE("anchored propagation matches the closed form") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
      const auto inst = fixtures::random_instance(rng, 12, 40, 6);
      const AnchorConfig config{0.7, {}};
      const auto closed = solve_anchored(inst.queries, inst.refs, inst.graph, config);
      CHECK(propagate(inst.queries, inst.refs, inst.graph, config, 1) == closed.optimized);
      const auto many = propagate(inst.queries, inst.refs, inst.graph, config, 200);
      CHECK((many - closed.optimized).cwiseAbs().maxCoeff() <= 1e-12);

      std::vector<double> trace;
      propagate(inst.queries, inst.refs, inst.graph, config, 5, false, &trace);
      REQUIRE(trace.size() == 6);
      for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] <= trace[t - 1] * (1.0 + 1e-12));

      const auto scores = message_passing_score(inst.queries, inst.refs, inst.graph, config, 3);
      CHECK((scores - patch_energies(inst.queries, closed.optimized)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK(code_of([] {
            fixtures::Instance none;
            propagate(none.queries, none.refs, none.graph, {}, 0);
          }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("a query on the reference manifold does not move") {
    FeatureMatrix<double> refs(3, 3), q(1, 3);
    refs << 1, 0, 0, 0, 2, 0, 0, 0, 3;
    q << 0, 2, 0;
    const auto g = anchored_graph(q, refs);
    const auto x = propagate(q, refs, g, {}, 4);
    CHECK(x == q);
    CHECK(message_passing_score(q, refs, g, {}, 4)[0] == 0.0);
  }

  TEST_CASE("unanchored propagation replaces each query with its neighbor mean") {
    std::mt19937_64 rng(11);
    const auto inst = fixtures::random_instance(rng, 8, 30, 5);
    const auto x = propagate(inst.queries, inst.refs, inst.graph, {}, 3, true);
    const oracle::Mat w = fixtures::dense_from_graph(inst.graph, inst.refs.rows());
    for (Index i = 0; i < inst.queries.rows(); ++i) {
      const oracle::Vec expected = (w.row(i) * inst.refs).transpose() / w.row(i).sum();
      CHECK((x.row(i).transpose() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("intra-query edges match a dense construction") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      const FeatureMatrix<double> q = fixtures::gaussian(rng, 15, 4);
      for (Index k : {1, 3, 20}) {
        const auto w = query_query_edges(q, k);
        const oracle::Mat dense = w;
        CHECK((dense - dense_intra(q, k)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(dense.isApprox(dense.transpose()));
        CHECK(dense.diagonal().isZero());
      }
    }
    CHECK(query_query_edges(FeatureMatrix<double>(FeatureMatrix<double>::Ones(1, 4)), 3).nonZeros() == 0);
    CHECK(code_of([] { query_query_edges(FeatureMatrix<double>(FeatureMatrix<double>::Ones(3, 2)), 0); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("non-bipartite solve matches a dense solve") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
      const auto inst = fixtures::random_instance(rng, 16, 40, 6);
      const auto intra = query_query_edges(inst.queries, 3);
      const auto x = solve_nonbipartite(inst.queries, inst.refs, inst.graph, intra, {0.5, {}});
      const oracle::Mat expected = dense_nonbipartite(
          inst.queries, inst.refs, fixtures::dense_from_graph(inst.graph, inst.refs.rows()), oracle::Mat(intra), 0.5);
      CHECK(((x - expected).cwiseAbs().array() / (1.0 + expected.cwiseAbs().array())).maxCoeff() <= 1e-9);
    }
  }

  TEST_CASE("without intra edges the non-bipartite solve is the bipartite one") {
    std::mt19937_64 rng(14);
    const auto inst = fixtures::random_instance(rng, 10, 30, 5);
    const SparseRows<double> empty(10, 10);
    const auto x = solve_nonbipartite(inst.queries, inst.refs, inst.graph, empty, {});
    const auto closed = anchored_update(inst.queries, inst.refs, inst.graph, {});
    CHECK((x - closed).cwiseAbs().maxCoeff() <= 1e-12);

    const FeatureMatrix<double> single = inst.queries.topRows(1);
    const auto g1 = anchored_graph(single, inst.refs);
    CHECK((nonbipartite_energy_score(single, inst.refs, g1, 5, {}) -
           patch_energies(single, anchored_update(single, inst.refs, g1, {})))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }

  TEST_CASE("two near-identical anomalous queries support each other") {
    // Each query anchors to a different reference; the shared intra edge
    // damps the part of their drifts that disagrees.
    FeatureMatrix<double> refs(2, 3), q(2, 3);
    refs << 1, 0, 1, -1, 0, 1;
    q << 1e-3, 0, 1, -1e-3, 0, 1;
    const auto g = anchored_graph(q, refs);
    REQUIRE(g.weights.nonZeros() == 2);
    const auto intra = query_query_edges(q, 1);
    REQUIRE(intra.coeff(0, 1) > 0.9);
    const auto bip_x = anchored_update(q, refs, g, {});
    const auto non_x = solve_nonbipartite(q, refs, g, intra, {});
    const auto bip = patch_energies(q, bip_x);
    const auto nonbip = nonbipartite_energy_score(q, refs, g, 1, {});
    for (Index i = 0; i < 2; ++i) {
      CHECK((non_x.row(i) - q.row(i)).norm() < (bip_x.row(i) - q.row(i)).norm());
      CHECK(nonbip[i] < bip[i]);
    }
  }

  TEST_CASE("non-bipartite input validation") {
    std::mt19937_64 rng(16);
    const auto inst = fixtures::random_instance(rng, 4, 10, 3);
    const SparseRows<double> wrong(3, 3);
    CHECK(code_of([&] { solve_nonbipartite(inst.queries, inst.refs, inst.graph, wrong, {}); }) ==
          ErrorCode::ShapeMismatch);
    const SparseRows<double> ok(4, 4);
    CHECK(code_of([&] { solve_nonbipartite(inst.queries, inst.refs, inst.graph, ok, {0.0, {}}); }) ==
          ErrorCode::NonPositiveLambda);
  }
}
