#pragma once

#include <algorithm>
#include <string>

#include "anoco/map_ops.hpp"
#include "anoco/similarity.hpp"
#include "anoco/types.hpp"

namespace anoco {

/// product: |x - f|^2 (1 - cos(x, f)); l2: |x - f|^2; cosdis: 1 - cos(x, f).
enum class NonconformityMetric { Product, L2, CosineDistance };

std::string_view to_string(NonconformityMetric metric);
NonconformityMetric parse_metric(std::string_view name);

namespace detail {

template <typename A, typename B>
double nonconformity(const A* f, const B* x, Index d, NonconformityMetric metric) {
  double drift2 = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double delta = static_cast<double>(x[k]) - static_cast<double>(f[k]);
    drift2 += delta * delta;
  }
  if (metric == NonconformityMetric::L2) return drift2;
  const double nf = norm(f, d), nx = norm(x, d);
  // A vanishing vector has no direction to disagree with: cos := 1.
  const double cos = (nf < kNormEpsilon || nx < kNormEpsilon) ? 1.0 : dot(f, x, d) / (nf * nx);
  const double angular = std::max(0.0, 1.0 - cos);
  return metric == NonconformityMetric::CosineDistance ? angular : drift2 * angular;
}

}  // namespace detail

/// Energy of moving original feature f to its optimized position f_tilde.
template <typename DerivedF, typename DerivedX>
double nonconformity_energy(const Eigen::MatrixBase<DerivedF>& f, const Eigen::MatrixBase<DerivedX>& f_tilde,
                            NonconformityMetric metric = NonconformityMetric::Product) {
  require(f.size() == f_tilde.size(), ErrorCode::DimensionMismatch, "nonconformity_energy: size mismatch");
  const auto a = detail::contiguous(f);
  const auto b = detail::contiguous(f_tilde);
  return detail::nonconformity(a.data(), b.data(), a.size(), metric);
}

template <typename Scalar>
Eigen::VectorXd patch_energies(const FeatureMatrix<Scalar>& original, const FeatureMatrix<Scalar>& optimized,
                               NonconformityMetric metric = NonconformityMetric::Product) {
  require(original.rows() == optimized.rows() && original.cols() == optimized.cols(), ErrorCode::ShapeMismatch,
          "patch_energies: shape mismatch");
  Eigen::VectorXd e(original.rows());
  for (Index i = 0; i < original.rows(); ++i) {
    e[i] = detail::nonconformity(original.row(i).data(), optimized.row(i).data(), original.cols(), metric);
  }
  return e;
}

}  // namespace anoco
