#pragma once

#include <string>
#include <vector>

#include "anoco/graph.hpp"
#include "anoco/types.hpp"

namespace anoco {

/// Anchor weights lambda_i tying each optimized query to its original
/// feature. A shared scalar unless per_query is filled.
struct AnchorConfig {
  double lambda = 1.0;
  std::vector<double> per_query;

  double at(Index i) const { return per_query.empty() ? lambda : per_query[static_cast<std::size_t>(i)]; }

  void validate(Index queries) const {
    if (per_query.empty()) {
      require(lambda > 0.0, ErrorCode::NonPositiveLambda, "lambda must be > 0, got " + std::to_string(lambda));
      return;
    }
    require(static_cast<Index>(per_query.size()) == queries, ErrorCode::ShapeMismatch,
            "per-query lambda count does not match the query count");
    for (double l : per_query) {
      require(l > 0.0, ErrorCode::NonPositiveLambda, "lambda must be > 0, got " + std::to_string(l));
    }
  }
};

template <typename Scalar>
struct SolveResult {
  FeatureMatrix<Scalar> optimized;
  FeatureMatrix<Scalar> drift;  // optimized - original
  double energy_before = 0.0;
  double energy_after = 0.0;
};

namespace detail {

template <typename Scalar>
void check_shapes(const FeatureMatrix<Scalar>& optimized, const FeatureMatrix<Scalar>& queries,
                  const FeatureMatrix<Scalar>& refs, const BipartiteGraph<Scalar>& graph) {
  require(optimized.rows() == queries.rows() && optimized.cols() == queries.cols(), ErrorCode::ShapeMismatch,
          "optimized features do not match the query shape");
  require(refs.cols() == queries.cols(), ErrorCode::ShapeMismatch, "query/reference dimension mismatch");
  require(graph.queries() == queries.rows(), ErrorCode::ShapeMismatch, "graph does not match the query count");
  require(graph.active_refs.empty() || graph.active_refs.back() < refs.rows(), ErrorCode::ShapeMismatch,
          "graph references rows outside the pool");
}

}  // namespace detail

/// E = sum_edges w_ij |x_i - r_j|^2 + sum_i lambda_i |x_i - f_i|^2, evaluated
/// edge by edge. Reference rows are taken from the full pool by original index.
template <typename Scalar>
double total_energy(const FeatureMatrix<Scalar>& optimized, const FeatureMatrix<Scalar>& queries,
                    const FeatureMatrix<Scalar>& refs, const BipartiteGraph<Scalar>& graph,
                    const AnchorConfig& config) {
  detail::check_shapes(optimized, queries, refs, graph);
  config.validate(queries.rows());
  double energy = 0.0;
  for (Index i = 0; i < queries.rows(); ++i) {
    const auto x = optimized.row(i).template cast<double>();
    for (typename SparseRows<Scalar>::InnerIterator it(graph.weights, i); it; ++it) {
      const Index j = graph.active_refs[static_cast<std::size_t>(it.col())];
      energy += static_cast<double>(it.value()) * (x - refs.row(j).template cast<double>()).squaredNorm();
    }
    energy += config.at(i) * (x - queries.row(i).template cast<double>()).squaredNorm();
  }
  return energy;
}

namespace detail {

/// x = f + sum_j w_ij (r_j - f) / (lambda + d_i), summed in ascending
/// reference order. Algebraically the closed form below; the residual form
/// keeps small drifts accurate and leaves f exactly in place when every
/// neighbor equals it.
template <typename Scalar>
void anchored_row(const FeatureMatrix<Scalar>& queries, const FeatureMatrix<Scalar>& refs,
                  const BipartiteGraph<Scalar>& graph, Index i, Scalar lambda, RowVector<Scalar>& acc,
                  FeatureMatrix<Scalar>& out) {
  acc.setZero(queries.cols());
  for (typename SparseRows<Scalar>::InnerIterator it(graph.weights, i); it; ++it) {
    acc += it.value() * (refs.row(graph.active_refs[static_cast<std::size_t>(it.col())]) - queries.row(i));
  }
  out.row(i) = queries.row(i) + acc / (lambda + graph.query_degree[i]);
}

}  // namespace detail

/// Closed-form minimizer of total_energy. L_qq + Lambda is diagonal, so each
/// query solves independently:
///   x_i = (lambda_i f_i + sum_j w_ij r_j) / (lambda_i + d_i).
template <typename Scalar>
FeatureMatrix<Scalar> anchored_update(const FeatureMatrix<Scalar>& queries, const FeatureMatrix<Scalar>& refs,
                                      const BipartiteGraph<Scalar>& graph, const AnchorConfig& config) {
  detail::check_shapes(queries, queries, refs, graph);
  config.validate(queries.rows());
  FeatureMatrix<Scalar> optimized(queries.rows(), queries.cols());
  RowVector<Scalar> acc(queries.cols());
  for (Index i = 0; i < queries.rows(); ++i) {
    detail::anchored_row(queries, refs, graph, i, static_cast<Scalar>(config.at(i)), acc, optimized);
  }
  return optimized;
}

/// anchored_update plus drift and the energy on both sides of the solve.
template <typename Scalar>
SolveResult<Scalar> solve_anchored(const FeatureMatrix<Scalar>& queries, const FeatureMatrix<Scalar>& refs,
                                   const BipartiteGraph<Scalar>& graph, const AnchorConfig& config) {
  SolveResult<Scalar> result;
  result.optimized = anchored_update(queries, refs, graph, config);
  result.drift = result.optimized - queries;
  result.energy_before = total_energy(queries, queries, refs, graph, config);
  result.energy_after = total_energy(result.optimized, queries, refs, graph, config);
  return result;
}

}  // namespace anoco
