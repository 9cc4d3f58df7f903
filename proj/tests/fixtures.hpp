#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "anoco/graph.hpp"
#include "anoco/retrieval.hpp"
#include "anoco/types.hpp"
#include "oracles.hpp"

namespace fixtures {

using anoco::FeatureMatrix;
using anoco::Index;

inline FeatureMatrix<double> gaussian(std::mt19937_64& rng, Index rows, Index cols, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  FeatureMatrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Points around a few shared centres, so anchors have consistent company.
inline FeatureMatrix<double> clustered(std::mt19937_64& rng, const FeatureMatrix<double>& centres, Index rows,
                                       double spread) {
  std::uniform_int_distribution<Index> pick(0, centres.rows() - 1);
  FeatureMatrix<double> m = gaussian(rng, rows, centres.cols(), spread);
  for (Index i = 0; i < rows; ++i) m.row(i) += centres.row(pick(rng));
  return m;
}

struct Instance {
  FeatureMatrix<double> queries;
  FeatureMatrix<double> refs;
  anoco::NeighborAssignment assignment;
  anoco::BipartiteGraph<double> graph;
};

inline Instance random_instance(std::mt19937_64& rng, Index nq, Index nr, Index d) {
  Instance inst;
  const FeatureMatrix<double> centres = gaussian(rng, 3, d, 2.0);
  inst.refs = clustered(rng, centres, nr, 0.4);
  inst.queries = clustered(rng, centres, nq, 0.8);
  anoco::ReferencePool<double> pool{inst.refs, {}};
  anoco::PreparedPool<double> prepared(pool);
  inst.assignment = anoco::assign_all(inst.queries, prepared);
  inst.graph = anoco::edge_weights(inst.queries, inst.refs, inst.assignment);
  return inst;
}

inline std::vector<std::vector<Index>> neighbor_lists(const anoco::NeighborAssignment& a) {
  std::vector<std::vector<Index>> out;
  for (Index i = 0; i < a.rows(); ++i) out.emplace_back(a.neighbors(i).begin(), a.neighbors(i).end());
  return out;
}

/// Dense N_q x N_r weight matrix read back from the sparse graph.
inline oracle::Mat dense_from_graph(const anoco::BipartiteGraph<double>& g, Index nr) {
  oracle::Mat w = oracle::Mat::Zero(g.queries(), nr);
  for (Index i = 0; i < g.queries(); ++i) {
    for (anoco::SparseRows<double>::InnerIterator it(g.weights, i); it; ++it) {
      w(i, g.active_refs[static_cast<std::size_t>(it.col())]) = it.value();
    }
  }
  return w;
}

/// Code of the anoco::Error thrown by f, or nullopt if it returns.
inline std::optional<anoco::ErrorCode> code_of(auto&& f) {
  try {
    f();
  } catch (const anoco::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("anoco_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures

namespace fixtures {

/// A (queries, pool) pair salted with exact ties: duplicated and
/// power-of-two-scaled reference rows, zero rows, and queries that copy
/// (a scaled) reference.
struct TiedCase {
  FeatureMatrix<double> queries;
  FeatureMatrix<double> refs;
};

inline TiedCase tied_case(std::mt19937_64& rng, Index max_queries = 4, Index max_refs = 24, Index max_dim = 12) {
  auto uniform = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
  const Index d = uniform(1, max_dim), nr = uniform(1, max_refs), nq = uniform(1, max_queries);
  TiedCase c;
  const FeatureMatrix<double> centres = gaussian(rng, uniform(1, 3), d, 1.0);
  c.refs = clustered(rng, centres, nr, 0.3);
  for (Index j = 1; j < nr; ++j) {
    switch (uniform(0, 5)) {
      case 0: c.refs.row(j) = c.refs.row(uniform(0, j - 1)); break;
      case 1: c.refs.row(j) = 2.0 * c.refs.row(uniform(0, j - 1)); break;
      case 2: c.refs.row(j) = 0.5 * c.refs.row(uniform(0, j - 1)); break;
      default: break;
    }
  }
  if (uniform(0, 7) == 0) c.refs.row(uniform(0, nr - 1)).setZero();
  c.queries = clustered(rng, centres, nq, 0.5);
  for (Index i = 0; i < nq; ++i) {
    switch (uniform(0, 6)) {
      case 0: c.queries.row(i) = c.refs.row(uniform(0, nr - 1)); break;
      case 1: c.queries.row(i) = 4.0 * c.refs.row(uniform(0, nr - 1)); break;
      case 2: c.queries.row(i).setZero(); break;
      default: break;
    }
  }
  return c;
}

}  // namespace fixtures
