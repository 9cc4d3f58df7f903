#include "cli/inputs.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace anoco::cli {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::InvalidArgument,
          what + ": cannot parse number '" + text + "'");
  return v;
}

void require_directory(const fs::path& dir, const char* role) {
  require(fs::is_directory(dir), ErrorCode::IoFailure, std::string(role) + " directory not found: " + dir.string());
}

}  // namespace

std::vector<fs::path> list_tensors(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == kTensorExtension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

ReferencePool<float> load_reference_pool(const fs::path& dir) {
  require_directory(dir, "reference");
  std::vector<ReferencePool<float>> parts;
  for (const auto& file : list_tensors(dir)) {
    parts.push_back(reference_pool_from_tensor<float>(read_tensor(file), file.stem().string()));
  }
  require(!parts.empty(), ErrorCode::EmptyPool, "no reference .anof files in " + dir.string());
  return concatenate_pools<float>(parts);
}

std::vector<QueryView> read_views_sidecar(const fs::path& sidecar) {
  std::ifstream in(sidecar);
  require(static_cast<bool>(in), ErrorCode::IoFailure, "cannot open " + sidecar.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, sidecar.string() + ": " + e.what());
  }
  std::vector<QueryView> views;
  try {
    for (const auto& v : doc.at("views")) {
      QueryView view;
      view.features = sidecar.parent_path() / v.at("features").get<std::string>();
      const auto& a = v.at("view_from_original");
      require(a.size() == 2 && a[0].size() == 3 && a[1].size() == 3, ErrorCode::InvalidArgument,
              sidecar.string() + ": view_from_original must be 2x3");
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) view.view_from_original(r, c) = a[r][c].get<double>();
      }
      if (v.contains("image_size")) {
        const auto& s = v.at("image_size");
        view.image_size = std::make_pair(s.at(0).get<Index>(), s.at(1).get<Index>());
      }
      views.push_back(std::move(view));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, sidecar.string() + ": " + e.what());
  }
  require(!views.empty(), ErrorCode::NoViews, sidecar.string() + " lists no views");
  return views;
}

std::vector<QueryInput> list_queries(const fs::path& dir, bool with_views) {
  require_directory(dir, "query");
  std::vector<QueryInput> queries;
  for (const auto& file : list_tensors(dir)) {
    QueryInput q{file.stem().string(), file, {}};
    if (with_views) {
      const fs::path sidecar = dir / (q.image_id + ".views.json");
      if (fs::exists(sidecar)) q.views = read_views_sidecar(sidecar);
    }
    queries.push_back(std::move(q));
  }
  require(!queries.empty(), ErrorCode::EmptyInput, "no query .anof files in " + dir.string());
  return queries;
}

std::map<std::string, std::uint8_t> load_labels(const fs::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::IoFailure, "cannot open labels file " + file.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && strip(line) == "image_id,label", ErrorCode::InvalidArgument,
          file.string() + ": expected header 'image_id,label'");
  std::map<std::string, std::uint8_t> labels;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    require(cells.size() == 2 && (cells[1] == "0" || cells[1] == "1"), ErrorCode::InvalidArgument,
            file.string() + ": bad row '" + line + "'");
    labels[cells[0]] = static_cast<std::uint8_t>(cells[1] == "1");
  }
  return labels;
}

BinaryMask load_mask(const fs::path& dir, const std::string& image_id) {
  const fs::path file = dir / (image_id + kTensorExtension);
  require(fs::exists(file), ErrorCode::MissingMask, "no mask for image '" + image_id + "' in " + dir.string());
  return mask_from_tensor(read_tensor(file));
}

void write_manifest(const fs::path& path, std::vector<ManifestRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  std::string text = "image_id,score,score_smoothed\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.score, r.score_smoothed);
    text += r.image_id + buf;
  }
  write_text_atomic(path, text);
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoFailure, "cannot open manifest " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && strip(line) == "image_id,score,score_smoothed",
          ErrorCode::InvalidArgument, path.string() + ": unexpected manifest header");
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    require(cells.size() == 3, ErrorCode::InvalidArgument, path.string() + ": bad row '" + line + "'");
    rows.push_back({cells[0], parse_double(cells[1], path.string()), parse_double(cells[2], path.string())});
  }
  return rows;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::IoFailure, "cannot open " + tmp.string());
    out << text;
    require(static_cast<bool>(out), ErrorCode::IoFailure, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorCode::IoFailure, "rename to " + path.string() + " failed: " + ec.message());
}

}  // namespace anoco::cli
