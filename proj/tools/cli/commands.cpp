#include "cli/commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "anoco/png.hpp"
#include "anoco/report.hpp"
#include "anoco/tensor_io.hpp"
#include "cli/inputs.hpp"
#include "json.hpp"

namespace anoco::cli {

namespace {

constexpr Index kPixelsPerPatch = 16;
constexpr double kSweepGrid[] = {1e-24, 0.01, 0.1, 1.0, 10.0, 100.0};
constexpr Method kLadder[] = {Method::KnnL2,        Method::KnnMahalanobis,       Method::GraphNonBipartite,
                              Method::GraphBipartiteNaive, Method::MessagePassing, Method::Anoco};

std::pair<Index, Index> image_size_for(const RunConfig& c, const FeatureGrid<float>& grid) {
  if (c.parsed_image_size) return *c.parsed_image_size;
  return {grid.height * kPixelsPerPatch, grid.width * kPixelsPerPatch};
}

AnomalyOutput score_one(const RunConfig& c, const Scorer<float>& scorer, const QueryInput& q) {
  const MapOptions map_options = c.map_options();
  const auto grid = feature_grid_from_tensor<float>(read_tensor(q.features), q.image_id);
  const auto [rows, cols] = image_size_for(c, grid);
  if (q.views.empty()) return scorer.score(grid, rows, cols, map_options);

  std::vector<View> views;
  std::vector<double> view_scores;
  AnomalyOutput first;
  for (std::size_t v = 0; v < q.views.size(); ++v) {
    const auto& spec = q.views[v];
    const auto view_grid = feature_grid_from_tensor<float>(read_tensor(spec.features), q.image_id);
    const auto [vr, vc] = spec.image_size.value_or(std::make_pair(rows, cols));
    AnomalyOutput o = scorer.score(view_grid, vr, vc, map_options);
    view_scores.push_back(o.image_score);
    views.push_back({std::move(o.map), spec.view_from_original});
    if (v == 0) first = std::move(o);
  }
  std::vector<double> weights;
  AnomalyOutput out = std::move(first);
  out.image_id = q.image_id;
  out.map = aggregate_views(views, rows, cols, c.view_weighting(), &weights);
  double num = 0.0, den = 0.0;
  for (std::size_t v = 0; v < weights.size(); ++v) {
    num += weights[v] * view_scores[v];
    den += weights[v];
  }
  out.image_score = num / den;
  out.smoothed_score = out.map.maxCoeff();
  spdlog::debug("{}: fused {} views", q.image_id, views.size());
  return out;
}

/// Scores every query with up to config.jobs threads. Output order follows
/// `queries`; the first failure in that order is rethrown.
std::vector<AnomalyOutput> score_queries(const RunConfig& c, const ReferencePool<float>& pool,
                                         const ScoringOptions& options, const std::vector<QueryInput>& queries) {
  const Scorer<float> scorer(pool, options);
  std::vector<AnomalyOutput> results(queries.size());
  std::vector<std::exception_ptr> errors(queries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      try {
        results[i] = score_one(c, scorer, queries[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(c.jobs), queries.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool_threads;
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

void write_outputs(const RunConfig& c, const std::vector<AnomalyOutput>& results) {
  const fs::path maps = c.out / "maps";
  fs::create_directories(maps);
  std::vector<ManifestRow> rows;
  for (const auto& r : results) {
    write_tensor(maps / (r.image_id + kTensorExtension), tensor_from_map(r.map));
    if (c.png) {
      const MapBounds b = write_map_png(maps / (r.image_id + ".png"), r.map);
      const nlohmann::ordered_json sidecar{{"min", b.min}, {"max", b.max}};
      write_text_atomic(maps / (r.image_id + ".png.json"), sidecar.dump(2) + "\n");
    }
    rows.push_back({r.image_id, r.image_score, r.smoothed_score});
  }
  write_manifest(c.out / "manifest.csv", std::move(rows));
}

struct Ground {
  std::map<std::string, std::uint8_t> labels;
  bool with_masks = false;
};

Ground load_ground(const RunConfig& c) {
  Ground g;
  if (!c.labels.empty()) g.labels = load_labels(c.labels);
  g.with_masks = !c.masks.empty();
  return g;
}

EvalSample make_sample(const RunConfig& c, const Ground& g, const std::string& id, double score,
                       std::optional<ImageMap> map) {
  EvalSample s;
  s.image_id = id;
  s.image_score = score;
  if (g.with_masks) {
    s.mask = load_mask(c.masks, id);
    s.map = std::move(map);
  }
  if (!c.labels.empty()) {
    const auto it = g.labels.find(id);
    require(it != g.labels.end(), ErrorCode::InvalidArgument, "no label for image '" + id + "'");
    s.label = it->second;
  } else {
    s.label = static_cast<std::uint8_t>(s.mask->maxCoeff() > 0);
  }
  return s;
}

EvalReport evaluate_results(const RunConfig& c, const Ground& g, const std::vector<AnomalyOutput>& results) {
  std::vector<EvalSample> samples;
  for (const auto& r : results) samples.push_back(make_sample(c, g, r.image_id, r.image_score, r.map));
  return evaluate(samples, c.eval_options());
}

void emit_report(const RunConfig& c, const std::string& stem, const std::vector<ReportRow>& rows) {
  fs::create_directories(c.out);
  write_text_atomic(c.out / (stem + ".json"), report_json(rows));
  const std::string table = report_table(rows);
  write_text_atomic(c.out / (stem + ".txt"), table);
  std::cout << table;
}

std::vector<QueryInput> queries_for(const RunConfig& c) { return list_queries(c.queries, c.tta); }

}  // namespace

void run_score(const RunConfig& c) {
  const auto pool = load_reference_pool(c.refs);
  const auto queries = queries_for(c);
  spdlog::info("scoring {} queries against {} reference patches (method {}, seed {})", queries.size(), pool.size(),
               c.method, c.seed);
  write_outputs(c, score_queries(c, pool, c.scoring(c.lambda()), queries));
}

void run_eval(const RunConfig& c) {
  const Ground ground = load_ground(c);
  std::vector<EvalSample> samples;
  if (!c.queries.empty()) {
    const auto pool = load_reference_pool(c.refs);
    const auto results = score_queries(c, pool, c.scoring(c.lambda()), queries_for(c));
    write_outputs(c, results);
    for (const auto& r : results) samples.push_back(make_sample(c, ground, r.image_id, r.image_score, r.map));
  } else {
    for (const auto& row : read_manifest(c.out / "manifest.csv")) {
      std::optional<ImageMap> map;
      if (ground.with_masks) map = map_from_tensor(read_tensor(c.out / "maps" / (row.image_id + kTensorExtension)));
      samples.push_back(make_sample(c, ground, row.image_id, row.score, std::move(map)));
    }
  }
  emit_report(c, "report", {{c.method, evaluate(samples, c.eval_options())}});
}

void run_ablate(const RunConfig& c) {
  const Ground ground = load_ground(c);
  const auto pool = load_reference_pool(c.refs);
  const auto queries = queries_for(c);
  std::vector<ReportRow> rows;
  for (Method m : kLadder) {
    RunConfig mc = c;
    mc.method = std::string(to_string(m));
    spdlog::info("ablation: {}", mc.method);
    rows.push_back({mc.method, evaluate_results(mc, ground, score_queries(mc, pool, mc.scoring(c.lambda()), queries))});
  }
  emit_report(c, "ablation", rows);
}

void run_sweep_lambda(const RunConfig& c) {
  const Ground ground = load_ground(c);
  const auto pool = load_reference_pool(c.refs);
  const auto queries = queries_for(c);
  std::set<double> grid(std::begin(kSweepGrid), std::end(kSweepGrid));
  grid.insert(c.lambdas.begin(), c.lambdas.end());

  std::vector<SweepPoint> points;
  std::vector<ReportRow> rows;
  for (double lambda : grid) {
    spdlog::info("sweep: lambda = {}", lambda);
    const EvalReport r = evaluate_results(c, ground, score_queries(c, pool, c.scoring(lambda), queries));
    points.push_back({lambda, "image_auroc", r.image_auroc});
    points.push_back({lambda, "image_aupr", r.image_aupr});
    points.push_back({lambda, "image_f1_max", r.image_f1_max});
    if (r.pixel_auroc) {
      points.push_back({lambda, "pixel_auroc", *r.pixel_auroc});
      points.push_back({lambda, "pixel_pro", *r.pixel_pro});
      points.push_back({lambda, "pixel_f1_max", *r.pixel_f1_max});
    }
    char label[48];
    std::snprintf(label, sizeof label, "lambda=%g", lambda);
    rows.push_back({label, r});
  }
  fs::create_directories(c.out);
  std::ostringstream csv;
  write_sweep_csv(csv, points);
  write_text_atomic(c.out / "sweep_lambda.csv", csv.str());
  emit_report(c, "sweep_lambda", rows);
}

void run(const RunConfig& c) {
  switch (c.mode) {
    case Mode::Score: return run_score(c);
    case Mode::Eval: return run_eval(c);
    case Mode::Ablate: return run_ablate(c);
    case Mode::SweepLambda: return run_sweep_lambda(c);
  }
}

}  // namespace anoco::cli
