#pragma once

#include <Eigen/SparseCore>

#include <algorithm>
#include <ostream>
#include <utility>
#include <vector>

#include "anoco/retrieval.hpp"
#include "anoco/similarity.hpp"
#include "anoco/types.hpp"

namespace anoco {

/// Harmonic-mean norm compatibility 2|u||v| / (|u| + |v|). Unbounded: it
/// grows with feature magnitude. Returns 0 when both norms vanish.
inline double norm_compatibility(double norm_u, double norm_v) {
  const double sum = norm_u + norm_v;
  if (!(sum > 0.0)) return 0.0;
  return 2.0 * norm_u * norm_v / sum;
}

template <typename DerivedU, typename DerivedV>
double norm_compatibility(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  const auto a = detail::contiguous(u);
  const auto b = detail::contiguous(v);
  return norm_compatibility(detail::norm(a.data(), a.size()), detail::norm(b.data(), b.size()));
}

template <typename Scalar>
using SparseRows = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// Query-to-reference adjacency restricted to the references some query
/// selected. There is no query-query or reference-reference block: the type
/// cannot represent one.
template <typename Scalar>
struct BipartiteGraph {
  std::vector<Index> active_refs;  // sorted original reference indices
  std::vector<Index> ref_remap;    // original index -> column, or -1
  SparseRows<Scalar> weights;      // N_q x |active_refs|, columns ascending per row
  Vector<Scalar> query_degree;
  Vector<Scalar> ref_degree;
  Index clamped_edges = 0;     // neighbors with negative cosine, weight forced to 0
  Index degenerate_edges = 0;  // neighbors where both norms vanish

  Index queries() const { return weights.rows(); }
  Index active() const { return weights.cols(); }
};

/// w_ij = s_ij * alpha_ij for j in N(i). Each query row stores its neighbors
/// in ascending reference order; that order is also the solver's summation order.
template <typename Scalar>
BipartiteGraph<Scalar> edge_weights(const FeatureMatrix<Scalar>& queries, const FeatureMatrix<Scalar>& refs,
                                    const NeighborAssignment& assignment) {
  const Index nq = queries.rows(), nr = refs.rows(), d = queries.cols();
  require(refs.cols() == d, ErrorCode::DimensionMismatch, "edge_weights: query/reference dimension mismatch");
  require(assignment.rows() == nq, ErrorCode::InconsistentAssignment,
          "edge_weights: assignment has " + std::to_string(assignment.rows()) + " rows for " + std::to_string(nq) +
              " queries");

  BipartiteGraph<Scalar> g;
  g.ref_remap.assign(static_cast<std::size_t>(nr), -1);
  for (Index i = 0; i < nq; ++i) {
    const auto nbrs = assignment.neighbors(i);
    require(!nbrs.empty(), ErrorCode::InconsistentAssignment, "edge_weights: empty neighbor set");
    for (Index j : nbrs) {
      require(j >= 0 && j < nr, ErrorCode::InconsistentAssignment, "edge_weights: neighbor index out of range");
      g.ref_remap[j] = 0;
    }
  }
  for (Index j = 0; j < nr; ++j) {
    if (g.ref_remap[j] == 0) {
      g.ref_remap[j] = static_cast<Index>(g.active_refs.size());
      g.active_refs.push_back(j);
    }
  }

  std::vector<double> ref_norm(static_cast<std::size_t>(nr), 0.0);
  for (Index j : g.active_refs) ref_norm[j] = detail::norm(refs.row(j).data(), d);

  g.weights.resize(nq, static_cast<Index>(g.active_refs.size()));
  Eigen::VectorXi per_row(nq);
  for (Index i = 0; i < nq; ++i) per_row[i] = static_cast<int>(assignment.neighbors(i).size());
  g.weights.reserve(per_row);

  std::vector<std::pair<Index, Scalar>> row;
  for (Index i = 0; i < nq; ++i) {
    const double qn = detail::norm(queries.row(i).data(), d);
    const auto nbrs = assignment.neighbors(i);
    const auto sims = assignment.similarities(i);
    row.clear();
    for (std::size_t t = 0; t < nbrs.size(); ++t) {
      const Index j = nbrs[t];
      if (qn + ref_norm[j] == 0.0) ++g.degenerate_edges;
      double s = sims[t];
      if (s < 0.0) {
        ++g.clamped_edges;
        s = 0.0;
      }
      row.emplace_back(g.ref_remap[j], static_cast<Scalar>(s * norm_compatibility(qn, ref_norm[j])));
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, w] : row) g.weights.insert(i, c) = w;
  }
  g.weights.makeCompressed();

  g.query_degree = Vector<Scalar>::Zero(nq);
  g.ref_degree = Vector<Scalar>::Zero(g.active());
  for (Index i = 0; i < nq; ++i) {
    for (typename SparseRows<Scalar>::InnerIterator it(g.weights, i); it; ++it) {
      g.query_degree[i] += it.value();
      g.ref_degree[it.col()] += it.value();
    }
  }
  return g;
}

template <typename Scalar>
struct LaplacianBlocks {
  Vector<Scalar> query_query;   // L_qq = D_q, diagonal
  SparseRows<Scalar> query_ref; // L_qr = -W_qr
};

template <typename Scalar>
LaplacianBlocks<Scalar> laplacian_blocks(const BipartiteGraph<Scalar>& graph) {
  return {graph.query_degree, SparseRows<Scalar>(-graph.weights)};
}

/// Debug dump: one "query_index ref_index weight" line per edge, original
/// reference indices.
template <typename Scalar>
void write_weights_coo(std::ostream& out, const BipartiteGraph<Scalar>& graph) {
  const auto old_precision = out.precision(17);
  for (Index i = 0; i < graph.queries(); ++i) {
    for (typename SparseRows<Scalar>::InnerIterator it(graph.weights, i); it; ++it) {
      out << i << ' ' << graph.active_refs[static_cast<std::size_t>(it.col())] << ' '
          << static_cast<double>(it.value()) << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace anoco
