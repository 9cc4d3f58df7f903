#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "anoco/metrics.hpp"

namespace anoco {

struct ReportRow {
  std::string label;  // method or configuration name
  EvalReport report;
};

/// JSON document with one object per row; metrics as raw fractions.
std::string report_json(const std::vector<ReportRow>& rows);

/// Aligned text table: image AUROC/AUPR/F1-MAX then pixel AUROC/PRO/F1-MAX,
/// in percent with one decimal. Missing pixel metrics print as "-".
std::string report_table(const std::vector<ReportRow>& rows);

struct SweepPoint {
  double lambda = 0.0;
  std::string metric;
  double value = 0.0;
};

/// "lambda,metric,value" CSV, rows in the given order.
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

}  // namespace anoco
