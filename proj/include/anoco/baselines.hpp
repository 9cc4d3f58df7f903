#pragma once

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <vector>

#include "anoco/graph.hpp"
#include "anoco/retrieval.hpp"
#include "anoco/scoring.hpp"
#include "anoco/solver.hpp"
#include "anoco/types.hpp"

namespace anoco {

// ---------------------------------------------------------------------------
// k-NN distance scoring

enum class KnnMetric { L2, Mahalanobis };

/// Mean distance to the k nearest pool rows. The Mahalanobis variant whitens
/// with the pool covariance shrunk towards a scaled identity,
/// cov + shrinkage * (tr(cov) / d) * I, since few-shot pools leave cov singular.
template <typename Scalar>
class KnnScorer {
 public:
  KnnScorer(const ReferencePool<Scalar>& pool, KnnMetric metric, Index k, double shrinkage = 1e-2)
      : metric_(metric), k_(k) {
    require(k >= 1, ErrorCode::InvalidArgument, "k-NN needs k >= 1");
    require(pool.size() >= k, ErrorCode::PoolTooSmall,
            "pool has " + std::to_string(pool.size()) + " rows, k-NN needs " + std::to_string(k));
    refs_ = pool.data.template cast<double>();
    if (metric == KnnMetric::Mahalanobis) {
      require(pool.size() >= 2, ErrorCode::PoolTooSmall, "Mahalanobis k-NN needs at least 2 pool rows");
      require(shrinkage > 0.0, ErrorCode::InvalidArgument, "Mahalanobis shrinkage must be > 0");
      const Index d = refs_.cols();
      const Eigen::RowVectorXd mean = refs_.colwise().mean();
      const Eigen::MatrixXd centered = refs_.rowwise() - mean;
      Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(refs_.rows() - 1);
      const double trace = cov.trace();
      const double ridge = shrinkage * (trace > 0.0 ? trace / static_cast<double>(d) : 1.0);
      cov.diagonal().array() += ridge;
      cholesky_ = cov.llt();
      require(cholesky_.info() == Eigen::Success, ErrorCode::InvalidArgument,
              "shrunk covariance is not positive definite");
      refs_ = whiten(refs_);
    }
  }

  double score(const RowVector<Scalar>& query) const {
    FeatureMatrix<Scalar> q = query;
    return score_all(q)[0];
  }

  Eigen::VectorXd score_all(const FeatureMatrix<Scalar>& queries) const {
    require(queries.cols() == refs_.cols(), ErrorCode::DimensionMismatch, "k-NN: feature dimension mismatch");
    FeatureMatrix<double> q = queries.template cast<double>();
    if (metric_ == KnnMetric::Mahalanobis) q = whiten(q);
    Eigen::VectorXd out(q.rows());
    std::vector<double> dist(static_cast<std::size_t>(refs_.rows()));
    for (Index i = 0; i < q.rows(); ++i) {
      for (Index j = 0; j < refs_.rows(); ++j) dist[j] = (refs_.row(j) - q.row(i)).norm();
      std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
      double sum = 0.0;
      for (Index t = 0; t < k_; ++t) sum += dist[t];
      out[i] = sum / static_cast<double>(k_);
    }
    return out;
  }

 private:
  FeatureMatrix<double> whiten(const FeatureMatrix<double>& x) const {
    // rows y with L y^T = x^T, so |y_a - y_b| is the Mahalanobis distance.
    return cholesky_.matrixL().solve(x.transpose()).transpose();
  }

  KnnMetric metric_;
  Index k_;
  FeatureMatrix<double> refs_;
  Eigen::LLT<Eigen::MatrixXd> cholesky_;
};

template <typename Derived>
double knn_score(const Eigen::MatrixBase<Derived>& query, const ReferencePool<typename Derived::Scalar>& pool,
                 KnnMetric metric, Index k, double shrinkage = 1e-2) {
  using Scalar = typename Derived::Scalar;
  return KnnScorer<Scalar>(pool, metric, k, shrinkage).score(detail::contiguous(query).transpose());
}

// ---------------------------------------------------------------------------
// Iterative propagation over the bipartite graph

/// Runs `rounds` synchronous updates with references held fixed:
///   anchored:   x_i <- (lambda f_i + sum_j w_ij r_j) / (lambda + d_i)
///   unanchored: x_i <- sum_j w_ij r_j / d_i
/// With clamped references neither rule reads the other queries, so both
/// reach their fixed point after the first round. energy_trace, if given,
/// receives total_energy of the state before round 1 and after every round.
template <typename Scalar>
FeatureMatrix<Scalar> propagate(const FeatureMatrix<Scalar>& queries, const FeatureMatrix<Scalar>& refs,
                                const BipartiteGraph<Scalar>& graph, const AnchorConfig& config, int rounds,
                                bool unanchored = false, std::vector<double>* energy_trace = nullptr) {
  require(rounds >= 1, ErrorCode::InvalidArgument, "message passing needs rounds >= 1");
  config.validate(queries.rows());
  FeatureMatrix<Scalar> state = queries;
  if (energy_trace) energy_trace->assign(1, total_energy(state, queries, refs, graph, config));
  RowVector<Scalar> acc(queries.cols());
  for (int r = 0; r < rounds; ++r) {
    FeatureMatrix<Scalar> next(state.rows(), state.cols());
    for (Index i = 0; i < state.rows(); ++i) {
      if (!unanchored) {
        detail::anchored_row(queries, refs, graph, i, static_cast<Scalar>(config.at(i)), acc, next);
        continue;
      }
      acc.setZero(queries.cols());
      for (typename SparseRows<Scalar>::InnerIterator it(graph.weights, i); it; ++it) {
        acc += it.value() * refs.row(graph.active_refs[static_cast<std::size_t>(it.col())]);
      }
      const Scalar degree = graph.query_degree[i];
      next.row(i) = degree > Scalar(0) ? RowVector<Scalar>(acc / degree) : RowVector<Scalar>(state.row(i));
    }
    state = std::move(next);
    if (energy_trace) energy_trace->push_back(total_energy(state, queries, refs, graph, config));
  }
  return state;
}

template <typename Scalar>
Eigen::VectorXd message_passing_score(const FeatureMatrix<Scalar>& queries, const FeatureMatrix<Scalar>& refs,
                                      const BipartiteGraph<Scalar>& graph, const AnchorConfig& config, int rounds,
                                      NonconformityMetric metric = NonconformityMetric::Product,
                                      bool unanchored = false) {
  return patch_energies(queries, propagate(queries, refs, graph, config, rounds, unanchored), metric);
}

// ---------------------------------------------------------------------------
// Non-bipartite graph energy

/// Symmetric query-query adjacency: each query links to its k_intra most
/// cosine-similar other queries with weight max(s, 0) * alpha; an edge
/// chosen from either side is kept.
template <typename Scalar>
SparseRows<Scalar> query_query_edges(const FeatureMatrix<Scalar>& queries, Index k_intra) {
  require(k_intra >= 1, ErrorCode::InvalidArgument, "intra-set edges need k_intra >= 1");
  const Index nq = queries.rows(), d = queries.cols();
  SparseRows<Scalar> w(nq, nq);
  if (nq < 2) return w;
  ReferencePool<Scalar> self{queries, {}};
  PreparedPool<Scalar> prepared(self);
  const auto nearest = assign_top_k(queries, prepared, std::min(k_intra + 1, nq));

  std::vector<double> norms(static_cast<std::size_t>(nq));
  for (Index i = 0; i < nq; ++i) norms[i] = detail::norm(queries.row(i).data(), d);
  std::vector<Eigen::Triplet<Scalar>> triplets;
  for (Index i = 0; i < nq; ++i) {
    const auto nbrs = nearest.neighbors(i);
    const auto sims = nearest.similarities(i);
    Index taken = 0;
    for (std::size_t t = 0; t < nbrs.size() && taken < k_intra; ++t) {
      if (nbrs[t] == i) continue;
      ++taken;
      const double weight = std::max(0.0, sims[t]) * norm_compatibility(norms[i], norms[nbrs[t]]);
      triplets.emplace_back(i, nbrs[t], static_cast<Scalar>(weight));
      triplets.emplace_back(nbrs[t], i, static_cast<Scalar>(weight));
    }
  }
  // Duplicates are the same symmetric weight; keep one copy.
  w.setFromTriplets(triplets.begin(), triplets.end(), [](const Scalar& a, const Scalar&) { return a; });
  return w;
}

/// Minimizes sum_qr w|x_i - r_j|^2 + sum_qq w|x_a - x_b|^2 + sum lambda|x_i - f_i|^2
/// with references clamped. The query block is no longer diagonal, so the
/// whole image is one sparse SPD solve.
template <typename Scalar>
FeatureMatrix<Scalar> solve_nonbipartite(const FeatureMatrix<Scalar>& queries, const FeatureMatrix<Scalar>& refs,
                                         const BipartiteGraph<Scalar>& graph, const SparseRows<Scalar>& intra,
                                         const AnchorConfig& config) {
  const Index nq = queries.rows();
  require(intra.rows() == nq && intra.cols() == nq, ErrorCode::ShapeMismatch, "intra-query edges do not match");
  require(graph.queries() == nq, ErrorCode::ShapeMismatch, "graph does not match the query count");
  config.validate(nq);

  std::vector<Eigen::Triplet<double>> triplets;
  for (Index i = 0; i < nq; ++i) {
    double diag = config.at(i) + static_cast<double>(graph.query_degree[i]);
    for (typename SparseRows<Scalar>::InnerIterator it(intra, i); it; ++it) {
      if (it.col() == i) continue;
      diag += static_cast<double>(it.value());
      triplets.emplace_back(i, it.col(), -static_cast<double>(it.value()));
    }
    triplets.emplace_back(i, i, diag);
  }
  Eigen::SparseMatrix<double> system(nq, nq);
  system.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::MatrixXd rhs(nq, queries.cols());
  for (Index i = 0; i < nq; ++i) {
    Eigen::RowVectorXd acc = config.at(i) * queries.row(i).template cast<double>();
    for (typename SparseRows<Scalar>::InnerIterator it(graph.weights, i); it; ++it) {
      acc += static_cast<double>(it.value()) *
             refs.row(graph.active_refs[static_cast<std::size_t>(it.col())]).template cast<double>();
    }
    rhs.row(i) = acc;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(system);
  require(ldlt.info() == Eigen::Success, ErrorCode::InvalidArgument, "non-bipartite system is not SPD");
  const Eigen::MatrixXd x = ldlt.solve(rhs);
  return x.template cast<Scalar>();
}

template <typename Scalar>
Eigen::VectorXd nonbipartite_energy_score(const FeatureMatrix<Scalar>& queries, const FeatureMatrix<Scalar>& refs,
                                          const BipartiteGraph<Scalar>& graph, Index k_intra,
                                          const AnchorConfig& config,
                                          NonconformityMetric metric = NonconformityMetric::Product) {
  const auto intra = query_query_edges(queries, k_intra);
  const FeatureMatrix<Scalar> optimized = solve_nonbipartite(queries, refs, graph, intra, config);
  return patch_energies(queries, optimized, metric);
}

}  // namespace anoco
