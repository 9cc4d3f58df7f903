#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

#include "anoco/screening.hpp"
#include "anoco/similarity.hpp"
#include "anoco/types.hpp"

namespace anoco {

/// One query's retrieval result. neighbors are ordered by similarity
/// descending (ties by ascending reference index) and start with the anchor.
struct NeighborRow {
  Index anchor = -1;
  double anchor_score = 0.0;
  std::vector<Index> neighbors;
  std::vector<double> similarity;  // s_ij, aligned with neighbors

  friend bool operator==(const NeighborRow&, const NeighborRow&) = default;
};

/// Neighbor sets of every query patch, stored row-compressed.
struct NeighborAssignment {
  std::vector<Index> anchor_index;
  std::vector<double> anchor_score;
  std::vector<Index> offsets{0};
  std::vector<Index> neighbor_index;
  std::vector<double> similarity;

  Index rows() const { return static_cast<Index>(anchor_index.size()); }

  std::span<const Index> neighbors(Index i) const {
    return {neighbor_index.data() + offsets[i], static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
  }
  std::span<const double> similarities(Index i) const {
    return {similarity.data() + offsets[i], static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
  }

  void push_back(const NeighborRow& row) {
    anchor_index.push_back(row.anchor);
    anchor_score.push_back(row.anchor_score);
    neighbor_index.insert(neighbor_index.end(), row.neighbors.begin(), row.neighbors.end());
    similarity.insert(similarity.end(), row.similarity.begin(), row.similarity.end());
    offsets.push_back(static_cast<Index>(neighbor_index.size()));
  }

  NeighborRow row(Index i) const {
    const auto n = neighbors(i);
    const auto s = similarities(i);
    return {anchor_index[i], anchor_score[i], {n.begin(), n.end()}, {s.begin(), s.end()}};
  }

  friend bool operator==(const NeighborAssignment&, const NeighborAssignment&) = default;
};

/// A reference pool with the per-row state retrieval needs: exact norms and
/// the similarity screen. Holds a reference to the pool, which must outlive it.
template <typename Scalar>
class PreparedPool {
 public:
  explicit PreparedPool(const ReferencePool<Scalar>& pool, ScreenKernel kernel = ScreenKernel::Auto)
      : pool_(&pool) {
    require(pool.size() >= 1, ErrorCode::EmptyPool, "reference pool is empty");
    const Index n = pool.size(), d = pool.dim();
    norms_.resize(n);
    FeatureMatrix<double> unit(n, d);
    for (Index j = 0; j < n; ++j) {
      norms_[j] = detail::norm(pool.data.row(j).data(), d);
      unit.row(j) = unit_row(pool.data.row(j).data(), d, norms_[j]);
    }
    screen_ = SimilarityScreen(unit, kernel);
  }

  const FeatureMatrix<Scalar>& data() const { return pool_->data; }
  const ReferencePool<Scalar>& pool() const { return *pool_; }
  Index size() const { return pool_->size(); }
  Index dim() const { return pool_->dim(); }
  double norm(Index j) const { return norms_[j]; }
  const SimilarityScreen& screen() const { return screen_; }

  /// Exact s_ij through the same arithmetic as cosine_similarity.
  double similarity(const Scalar* query, double query_norm, Index j) const {
    return detail::cosine_from_parts(detail::dot(query, pool_->data.row(j).data(), dim()), query_norm, norms_[j]);
  }

  /// Exact cosine between two pool rows.
  double self_similarity(Index a, Index b) const {
    return detail::cosine_from_parts(detail::dot(pool_->data.row(a).data(), pool_->data.row(b).data(), dim()),
                                     norms_[a], norms_[b]);
  }

  static RowVector<double> unit_row(const Scalar* x, Index d, double norm) {
    RowVector<double> out(d);
    if (norm < kNormEpsilon) {
      out.setZero();
    } else {
      for (Index k = 0; k < d; ++k) out[k] = static_cast<double>(x[k]) / norm;
    }
    return out;
  }

 private:
  const ReferencePool<Scalar>* pool_;
  std::vector<double> norms_;
  SimilarityScreen screen_;
};

namespace detail {

struct Ranked {
  Index index;
  double similarity;
};

inline bool ranks_before(const Ranked& a, const Ranked& b) {
  return a.similarity > b.similarity || (a.similarity == b.similarity && a.index < b.index);
}

/// Enumerates references in exact (similarity desc, index asc) order for one
/// query, evaluating exactly only the pairs the screen cannot rule out.
///
/// References with approx >= floor_ are pending (in approx order) or
/// evaluated; the rest have exact similarity < floor_ + bound_, and a pending
/// one has exact similarity <= approx + bound_. The best evaluated entry is
/// emitted once it beats both; otherwise the top pending reference is
/// evaluated, and the floor drops when nothing is pending.
template <typename Scalar>
class SortedWalk {
 public:
  SortedWalk(const PreparedPool<Scalar>& pool, const Scalar* query, double query_norm,
             std::span<const float> approx, double bound)
      : pool_(pool), query_(query), query_norm_(query_norm), approx_(approx), bound_(bound) {
    std::tie(approx_min_, approx_max_) = extrema(approx);
    step_ = 4 * bound_;
  }

  bool next(Ranked& out) {
    for (;;) {
      const auto best = std::min_element(evaluated_.begin(), evaluated_.end(), ranks_before);
      if (best != evaluated_.end() && certified(best->similarity)) {
        out = *best;
        evaluated_.erase(best);
        return true;
      }
      if (cursor_ < pending_.size()) {
        const Index j = pending_[cursor_++].index;
        evaluated_.push_back({j, pool_.similarity(query_, query_norm_, j)});
      } else if (exhausted_) {
        return false;
      } else {
        lower_floor();
      }
    }
  }

 private:
  struct Pending {
    Index index;
    float approx;
  };

  bool certified(double s) const {
    const bool above_pending = cursor_ == pending_.size() || s > pending_[cursor_].approx + bound_;
    return above_pending && (exhausted_ || s >= floor_ + bound_);
  }

  void lower_floor() {
    const double ceiling = floor_;
    double next_floor;
    if (!started_) {
      next_floor = approx_max_ - 2 * bound_;
      started_ = true;
    } else {
      next_floor = floor_ - step_;
      step_ *= 2;
    }
    if (next_floor <= approx_min_) {
      next_floor = -std::numeric_limits<double>::infinity();
      exhausted_ = true;
    }
    band_.clear();
    collect_in_range(approx_, next_floor, ceiling, band_);
    pending_.clear();
    for (Index j : band_) pending_.push_back({j, approx_[static_cast<std::size_t>(j)]});
    std::sort(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) { return a.approx > b.approx; });
    cursor_ = 0;
    floor_ = next_floor;
  }

  const PreparedPool<Scalar>& pool_;
  const Scalar* query_;
  double query_norm_;
  std::span<const float> approx_;
  double bound_;
  float approx_max_ = 0, approx_min_ = 0;
  double floor_ = std::numeric_limits<double>::infinity();
  double step_ = 0;
  bool started_ = false;
  bool exhausted_ = false;
  std::vector<Ranked> evaluated_;
  std::vector<Pending> pending_;
  std::vector<Index> band_;
  std::size_t cursor_ = 0;
};

enum class RetrievalRule { AnchorConsistent, TopK };

template <typename Scalar>
NeighborRow retrieve_row(const PreparedPool<Scalar>& pool, SortedWalk<Scalar>& walk, RetrievalRule rule, Index k) {
  NeighborRow row;
  Ranked r;
  if (!walk.next(r)) fail(ErrorCode::EmptyPool, "reference pool is empty");
  row.anchor = r.index;
  row.anchor_score = r.similarity;
  row.neighbors.push_back(r.index);
  row.similarity.push_back(r.similarity);
  if (rule == RetrievalRule::TopK) {
    while (static_cast<Index>(row.neighbors.size()) < k && walk.next(r)) {
      row.neighbors.push_back(r.index);
      row.similarity.push_back(r.similarity);
    }
    return row;
  }
  // Longest prefix of the s-sorted list whose anchor similarity beats s*.
  // The anchor itself is always kept.
  while (walk.next(r)) {
    if (!(pool.self_similarity(row.anchor, r.index) > row.anchor_score)) break;
    row.neighbors.push_back(r.index);
    row.similarity.push_back(r.similarity);
  }
  return row;
}

template <typename Scalar>
NeighborAssignment retrieve_all(const FeatureMatrix<Scalar>& queries, const PreparedPool<Scalar>& pool,
                                RetrievalRule rule, Index k) {
  require(queries.cols() == pool.dim(), ErrorCode::DimensionMismatch,
          "query dimension " + std::to_string(queries.cols()) + " != reference dimension " +
              std::to_string(pool.dim()));
  constexpr Index kBlock = 256;
  const Index nq = queries.rows(), d = queries.cols();
  NeighborAssignment out;
  std::vector<double> qnorm(static_cast<std::size_t>(nq));
  FeatureMatrix<double> unit;
  FeatureMatrix<float> approx;
  Eigen::VectorXd bound;
  for (Index b0 = 0; b0 < nq; b0 += kBlock) {
    const Index rows = std::min(kBlock, nq - b0);
    unit.resize(rows, d);
    for (Index i = 0; i < rows; ++i) {
      const Scalar* q = queries.row(b0 + i).data();
      qnorm[b0 + i] = norm(q, d);
      unit.row(i) = PreparedPool<Scalar>::unit_row(q, d, qnorm[b0 + i]);
    }
    pool.screen().screen(unit, approx, bound);
    for (Index i = 0; i < rows; ++i) {
      SortedWalk<Scalar> walk(pool, queries.row(b0 + i).data(), qnorm[b0 + i],
                              {approx.row(i).data(), static_cast<std::size_t>(approx.cols())}, bound(i));
      out.push_back(retrieve_row(pool, walk, rule, k));
    }
  }
  return out;
}

template <typename Derived>
FeatureMatrix<typename Derived::Scalar> as_query_matrix(const Eigen::MatrixBase<Derived>& query) {
  using Scalar = typename Derived::Scalar;
  FeatureMatrix<Scalar> m = contiguous(query).transpose();
  return m;
}

}  // namespace detail

/// j*(i) = argmax_j s_ij, ties to the lowest reference index.
template <typename Derived>
std::pair<Index, double> select_anchor(const Eigen::MatrixBase<Derived>& query,
                                       const PreparedPool<typename Derived::Scalar>& pool) {
  const auto q = detail::as_query_matrix(query);
  const auto a = detail::retrieve_all(q, pool, detail::RetrievalRule::TopK, 1);
  return {a.anchor_index[0], a.anchor_score[0]};
}

template <typename Derived>
std::pair<Index, double> select_anchor(const Eigen::MatrixBase<Derived>& query,
                                       const ReferencePool<typename Derived::Scalar>& pool) {
  return select_anchor(query, PreparedPool<typename Derived::Scalar>(pool));
}

/// Anchor-consistent neighbor set of one query: references in s-descending
/// order, kept while their similarity to the anchor exceeds the anchor score.
template <typename Derived>
NeighborRow anchor_consistent_neighbors(const Eigen::MatrixBase<Derived>& query,
                                        const PreparedPool<typename Derived::Scalar>& pool) {
  const auto q = detail::as_query_matrix(query);
  return detail::retrieve_all(q, pool, detail::RetrievalRule::AnchorConsistent, 0).row(0);
}

template <typename Derived>
NeighborRow anchor_consistent_neighbors(const Eigen::MatrixBase<Derived>& query,
                                        const ReferencePool<typename Derived::Scalar>& pool) {
  return anchor_consistent_neighbors(query, PreparedPool<typename Derived::Scalar>(pool));
}

template <typename Scalar>
NeighborAssignment assign_all(const FeatureMatrix<Scalar>& queries, const PreparedPool<Scalar>& pool) {
  return detail::retrieve_all(queries, pool, detail::RetrievalRule::AnchorConsistent, 0);
}

template <typename Scalar>
NeighborAssignment assign_all(const FeatureGrid<Scalar>& queries, const ReferencePool<Scalar>& pool) {
  return assign_all(queries.data, PreparedPool<Scalar>(pool));
}

/// Naive retrieval: the k most similar references, no anchor consistency.
/// k larger than the pool keeps the whole pool.
template <typename Scalar>
NeighborAssignment assign_top_k(const FeatureMatrix<Scalar>& queries, const PreparedPool<Scalar>& pool, Index k) {
  require(k >= 1, ErrorCode::InvalidArgument, "top-k retrieval needs k >= 1");
  return detail::retrieve_all(queries, pool, detail::RetrievalRule::TopK, k);
}

}  // namespace anoco
