#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "anoco/map_ops.hpp"
#include "anoco/metrics.hpp"
#include "anoco/pipeline.hpp"

namespace anoco::cli {

enum class Mode { Score, Eval, Ablate, SweepLambda };

struct RunConfig {
  std::string mode_name = "score";
  Mode mode = Mode::Score;  // set by finalize from mode_name
  std::string method = "anoco";
  std::vector<double> lambdas;
  Index knn_k = 1;
  Index retrieval_k = 5;
  Index intra_k = 5;
  int rounds = 1;
  double shrinkage = 1e-2;
  bool unanchored = false;
  std::string metric = "product";
  bool smooth = true;
  std::string upsampling = "bilinear";
  bool tta = false;
  std::string tta_weights = "entropy";
  bool png = false;
  bool normalize_maps = false;
  std::filesystem::path refs, queries, masks, labels, out;
  std::string image_size;  // "HxW", empty = 16 pixels per patch
  int jobs = 1;
  std::uint64_t seed = 0;

  std::optional<std::pair<Index, Index>> parsed_image_size;

  ScoringOptions scoring(double lambda) const;
  MapOptions map_options() const;
  ViewWeighting view_weighting() const;
  EvalOptions eval_options() const;
  double lambda() const { return lambdas.empty() ? 1.0 : lambdas.front(); }
};

std::string_view to_string(Mode mode);

/// Registers every flag on `app`, bound to `config`. A flat key=value file
/// given with --config fills anything not set on the command line.
void add_options(CLI::App& app, RunConfig& config);

/// Cross-flag validation after parsing; throws anoco::Error.
void finalize(RunConfig& config);

}  // namespace anoco::cli
