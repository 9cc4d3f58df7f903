#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anoco/tensor_io.hpp"
#include "anoco/types.hpp"

namespace anoco::cli {

namespace fs = std::filesystem;

/// Every *.anof file in `dir`, sorted by file name.
std::vector<fs::path> list_tensors(const fs::path& dir);

/// Stacks all reference files in `dir` ([N, d] or [H_p, W_p, d]).
ReferencePool<float> load_reference_pool(const fs::path& dir);

struct QueryView {
  fs::path features;
  Eigen::Matrix<double, 2, 3> view_from_original;
  std::optional<std::pair<Index, Index>> image_size;
};

struct QueryInput {
  std::string image_id;
  fs::path features;
  std::vector<QueryView> views;  // filled only when views are requested and a sidecar exists
};

/// Query grids in `dir`; the image id is the file stem. With `with_views`, a
/// sibling <id>.views.json lists the augmented views to fuse.
std::vector<QueryInput> list_queries(const fs::path& dir, bool with_views);

std::vector<QueryView> read_views_sidecar(const fs::path& sidecar);

/// CSV with header image_id,label and labels 0 (normal) or 1 (anomalous).
std::map<std::string, std::uint8_t> load_labels(const fs::path& file);

/// Mask <dir>/<id>.anof; MissingMask if absent.
BinaryMask load_mask(const fs::path& dir, const std::string& image_id);

struct ManifestRow {
  std::string image_id;
  double score = 0.0;
  double score_smoothed = 0.0;
};

/// Header image_id,score,score_smoothed; rows sorted by image id.
void write_manifest(const fs::path& path, std::vector<ManifestRow> rows);
std::vector<ManifestRow> read_manifest(const fs::path& path);

/// Writes a sibling temporary file, then renames it over `path`.
void write_text_atomic(const fs::path& path, const std::string& text);

}  // namespace anoco::cli
