#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "anoco/baselines.hpp"
#include "anoco/graph.hpp"
#include "anoco/map_ops.hpp"
#include "anoco/retrieval.hpp"
#include "anoco/scoring.hpp"
#include "anoco/solver.hpp"
#include "anoco/types.hpp"

namespace anoco {

enum class Method { Anoco, KnnL2, KnnMahalanobis, GraphNonBipartite, GraphBipartiteNaive, MessagePassing };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct ScoringOptions {
  Method method = Method::Anoco;
  double lambda = 1.0;
  Index knn_k = 1;
  Index retrieval_k = 5;  // top-k retrieval for graph_nonbipartite and graph_bipartite_naive
  Index intra_k = 5;
  int rounds = 1;
  double shrinkage = 1e-2;
  bool unanchored_propagation = false;
  NonconformityMetric metric = NonconformityMetric::Product;
};

struct AnomalyOutput {
  std::string image_id;
  Index grid_rows = 0;
  Index grid_cols = 0;
  Eigen::VectorXd patch_energies;
  ImageMap map;
  double image_score = 0.0;     // max over raw patch energies
  double smoothed_score = 0.0;  // max over the assembled map
  MapOptions map_options;
};

/// Scores query grids against one reference pool. Pool preprocessing (norms,
/// quantized screen, covariance) happens once at construction; the pool must
/// outlive the scorer. score() is const and safe to call from several threads.
template <typename Scalar>
class Scorer {
 public:
  Scorer(const ReferencePool<Scalar>& pool, ScoringOptions options) : pool_(pool), options_(options) {
    pool.validate();
    AnchorConfig{options.lambda, {}}.validate(0);
    switch (options.method) {
      case Method::KnnL2:
        knn_ = std::make_unique<KnnScorer<Scalar>>(pool, KnnMetric::L2, options.knn_k);
        break;
      case Method::KnnMahalanobis:
        knn_ = std::make_unique<KnnScorer<Scalar>>(pool, KnnMetric::Mahalanobis, options.knn_k, options.shrinkage);
        break;
      default:
        require(options.retrieval_k >= 1, ErrorCode::InvalidArgument, "retrieval k must be >= 1");
        require(options.intra_k >= 1, ErrorCode::InvalidArgument, "intra k must be >= 1");
        require(options.rounds >= 1, ErrorCode::InvalidArgument, "rounds must be >= 1");
        prepared_ = std::make_unique<PreparedPool<Scalar>>(pool);
    }
  }

  const ScoringOptions& options() const { return options_; }

  Eigen::VectorXd patch_scores(const FeatureMatrix<Scalar>& queries) const {
    require(queries.rows() >= 1, ErrorCode::EmptyInput, "query grid has no patches");
    require(queries.cols() == pool_.data.cols(), ErrorCode::DimensionMismatch,
            "query dimension " + std::to_string(queries.cols()) + " != reference dimension " +
                std::to_string(pool_.data.cols()));
    if (knn_) return knn_->score_all(queries);

    const AnchorConfig config{options_.lambda, {}};
    const bool anchored = options_.method == Method::Anoco || options_.method == Method::MessagePassing;
    const NeighborAssignment assignment = anchored
                                              ? assign_all(queries, *prepared_)
                                              : assign_top_k(queries, *prepared_, options_.retrieval_k);
    const auto graph = edge_weights(queries, pool_.data, assignment);
    switch (options_.method) {
      case Method::GraphNonBipartite:
        return nonbipartite_energy_score(queries, pool_.data, graph, options_.intra_k, config, options_.metric);
      case Method::MessagePassing:
        return message_passing_score(queries, pool_.data, graph, config, options_.rounds, options_.metric,
                                     options_.unanchored_propagation);
      default:
        return patch_energies(queries, anchored_update(queries, pool_.data, graph, config), options_.metric);
    }
  }

  AnomalyOutput score(const FeatureGrid<Scalar>& grid, Index rows, Index cols, const MapOptions& map = {}) const {
    grid.validate();
    AnomalyOutput out;
    out.image_id = grid.image_id;
    out.grid_rows = grid.height;
    out.grid_cols = grid.width;
    out.map_options = map;
    out.patch_energies = patch_scores(grid.data);
    out.map = assemble_map(out.patch_energies, grid.height, grid.width, rows, cols, map);
    out.image_score = image_score(out.patch_energies);
    out.smoothed_score = out.map.maxCoeff();
    return out;
  }

 private:
  const ReferencePool<Scalar>& pool_;
  ScoringOptions options_;
  std::unique_ptr<PreparedPool<Scalar>> prepared_;
  std::unique_ptr<KnnScorer<Scalar>> knn_;
};

}  // namespace anoco
