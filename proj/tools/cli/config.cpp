#include "cli/config.hpp"

#include <charconv>
#include <map>

namespace anoco::cli {

namespace {

const std::map<std::string, Mode> kModes{
    {"score", Mode::Score}, {"eval", Mode::Eval}, {"ablate", Mode::Ablate}, {"sweep-lambda", Mode::SweepLambda}};

std::pair<Index, Index> parse_image_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  long long h = 0, w = 0;
  const bool ok = x != std::string::npos &&
                  std::from_chars(text.data(), text.data() + x, h).ptr == text.data() + x &&
                  std::from_chars(text.data() + x + 1, text.data() + text.size(), w).ptr == text.data() + text.size();
  require(ok && h >= 1 && w >= 1, ErrorCode::InvalidArgument, "--image-size expects HxW, got '" + text + "'");
  return {h, w};
}

}  // namespace

std::string_view to_string(Mode mode) {
  for (const auto& [name, m] : kModes) {
    if (m == mode) return name;
  }
  return "score";
}

ScoringOptions RunConfig::scoring(double lambda_value) const {
  ScoringOptions o;
  o.method = parse_method(method);
  o.lambda = lambda_value;
  o.knn_k = knn_k;
  o.retrieval_k = retrieval_k;
  o.intra_k = intra_k;
  o.rounds = rounds;
  o.shrinkage = shrinkage;
  o.unanchored_propagation = unanchored;
  o.metric = parse_metric(metric);
  return o;
}

MapOptions RunConfig::map_options() const {
  MapOptions o;
  o.smooth = smooth;
  o.upsampling = upsampling == "nearest" ? Upsampling::Nearest : Upsampling::Bilinear;
  return o;
}

ViewWeighting RunConfig::view_weighting() const {
  return tta_weights == "uniform" ? ViewWeighting::Uniform : ViewWeighting::Entropy;
}

EvalOptions RunConfig::eval_options() const {
  EvalOptions o;
  o.normalize_maps = normalize_maps;
  return o;
}

void add_options(CLI::App& app, RunConfig& c) {
  app.set_config("--config", "", "Flat key=value config file; command-line flags take precedence");
  app.add_option("--mode", c.mode_name, "Run mode")->check(CLI::IsMember({"score", "eval", "ablate", "sweep-lambda"}));
  app.add_option("--method", c.method, "Scoring method")
      ->check(CLI::IsMember({"anoco", "knn_l2", "knn_mahalanobis", "graph_nonbipartite", "graph_bipartite_naive",
                             "message_passing"}));
  app.add_option("--lambda", c.lambdas, "Anchor weight; in sweep-lambda mode, values added to the default grid")
      ->delimiter(',');
  app.add_option("--k", c.knn_k, "Neighbours averaged by the k-NN baselines")->check(CLI::PositiveNumber);
  app.add_option("--retrieval-k", c.retrieval_k, "Top-k retrieval size for the non-anchored graph baselines")
      ->check(CLI::PositiveNumber);
  app.add_option("--intra-k", c.intra_k, "Query-query edges per patch for graph_nonbipartite")
      ->check(CLI::PositiveNumber);
  app.add_option("--rounds", c.rounds, "Message-passing rounds")->check(CLI::PositiveNumber);
  app.add_option("--shrinkage", c.shrinkage, "Mahalanobis covariance shrinkage")->check(CLI::PositiveNumber);
  app.add_flag("--unanchored", c.unanchored, "Message passing without the anchor term");
  app.add_option("--metric", c.metric, "Non-conformity energy")->check(CLI::IsMember({"product", "l2", "cosdis"}));
  app.add_flag("!--no-smooth", c.smooth, "Skip the Gaussian smoothing of maps");
  app.add_option("--upsampling", c.upsampling, "Patch-to-pixel upsampling")
      ->check(CLI::IsMember({"bilinear", "nearest"}));
  app.add_flag("--tta", c.tta, "Fuse augmented views listed in <id>.views.json sidecars");
  app.add_option("--tta-weights", c.tta_weights, "View weighting for --tta")
      ->check(CLI::IsMember({"entropy", "uniform"}));
  app.add_flag("--png", c.png, "Also write min-max normalized PNG maps");
  app.add_flag("--normalize-maps", c.normalize_maps, "Per-image min-max maps before pooling pixel metrics");
  app.add_option("--refs", c.refs, "Directory of reference .anof files");
  app.add_option("--queries", c.queries, "Directory of query .anof feature grids");
  app.add_option("--masks", c.masks, "Directory of <id>.anof ground-truth masks");
  app.add_option("--labels", c.labels, "CSV with header image_id,label");
  app.add_option("--out", c.out, "Output directory")->required();
  app.add_option("--image-size", c.image_size, "Map resolution HxW");
  app.add_option("--jobs", c.jobs, "Images scored in parallel")->check(CLI::PositiveNumber);
  app.add_option("--seed", c.seed, "Run seed, recorded in the run log");
}

void finalize(RunConfig& c) {
  const auto mode = kModes.find(c.mode_name);
  require(mode != kModes.end(), ErrorCode::InvalidArgument, "unknown mode '" + c.mode_name + "'");
  c.mode = mode->second;
  if (!c.image_size.empty()) c.parsed_image_size = parse_image_size(c.image_size);
  for (double l : c.lambdas) {
    require(l > 0.0, ErrorCode::NonPositiveLambda, "lambda must be > 0, got " + std::to_string(l));
  }
  require(c.mode == Mode::SweepLambda || c.lambdas.size() <= 1, ErrorCode::InvalidArgument,
          "several --lambda values are only meaningful with --mode sweep-lambda");
  const bool needs_inputs = c.mode != Mode::Eval || !c.queries.empty();
  if (needs_inputs) {
    require(!c.refs.empty(), ErrorCode::InvalidArgument, "--refs is required");
    require(!c.queries.empty(), ErrorCode::InvalidArgument, "--queries is required");
  }
  if (c.mode != Mode::Score) {
    require(!c.labels.empty() || !c.masks.empty(), ErrorCode::InvalidArgument,
            "evaluation needs --labels or --masks");
  }
}

}  // namespace anoco::cli
