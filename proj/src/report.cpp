#include "anoco/report.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace anoco {

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
  return buf;
}

}  // namespace

std::string report_json(const std::vector<ReportRow>& rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& [label, r] : rows) {
    nlohmann::ordered_json entry;
    entry["label"] = label;
    entry["images"] = r.images;
    entry["anomalous"] = r.anomalous;
    entry["image"] = {{"auroc", r.image_auroc}, {"aupr", r.image_aupr}, {"f1_max", r.image_f1_max}};
    entry["pixel"] = {{"auroc", optional_json(r.pixel_auroc)},
                      {"pro", optional_json(r.pixel_pro)},
                      {"f1_max", optional_json(r.pixel_f1_max)}};
    doc.push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

std::string report_table(const std::vector<ReportRow>& rows) {
  std::size_t width = 6;
  for (const auto& row : rows) width = std::max(width, row.label.size());
  constexpr int kCol = 8;
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "" << " | " << std::setw(3 * kCol) << "Image"
      << " | Pixel\n";
  out << std::setw(static_cast<int>(width)) << "Method" << " | " << std::right;
  for (const char* h : {"AUROC", "AUPR", "F1-MAX"}) out << std::setw(kCol) << h;
  out << " | ";
  for (const char* h : {"AUROC", "PRO", "F1-MAX"}) out << std::setw(kCol) << h;
  out << '\n' << std::string(width + 3 + 3 * kCol + 3 + 3 * kCol, '-') << '\n';
  for (const auto& [label, r] : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << label << " | " << std::right;
    for (double v : {r.image_auroc, r.image_aupr, r.image_f1_max}) out << std::setw(kCol) << percent(v);
    out << " | ";
    for (const auto& v : {r.pixel_auroc, r.pixel_pro, r.pixel_f1_max}) out << std::setw(kCol) << percent(v);
    out << '\n';
  }
  return out.str();
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "lambda,metric,value\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g", p.lambda);
    out << buf << ',' << p.metric << ',';
    std::snprintf(buf, sizeof buf, "%.17g", p.value);
    out << buf << '\n';
  }
}

}  // namespace anoco
