#include "anoco/pipeline.hpp"

#include <array>
#include <utility>

namespace anoco {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 6> kMethodNames{{
    {Method::Anoco, "anoco"},
    {Method::KnnL2, "knn_l2"},
    {Method::KnnMahalanobis, "knn_mahalanobis"},
    {Method::GraphNonBipartite, "graph_nonbipartite"},
    {Method::GraphBipartiteNaive, "graph_bipartite_naive"},
    {Method::MessagePassing, "message_passing"},
}};

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  fail(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

}  // namespace anoco
