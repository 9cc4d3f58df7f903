#include "anoco/scoring.hpp"

namespace anoco {

std::string_view to_string(NonconformityMetric metric) {
  switch (metric) {
    case NonconformityMetric::Product: return "product";
    case NonconformityMetric::L2: return "l2";
    case NonconformityMetric::CosineDistance: return "cosdis";
  }
  return "product";
}

NonconformityMetric parse_metric(std::string_view name) {
  if (name == "product") return NonconformityMetric::Product;
  if (name == "l2") return NonconformityMetric::L2;
  if (name == "cosdis") return NonconformityMetric::CosineDistance;
  fail(ErrorCode::InvalidArgument, "unknown non-conformity metric '" + std::string(name) + "'");
}

}  // namespace anoco
