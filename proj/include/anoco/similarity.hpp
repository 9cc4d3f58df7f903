#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "anoco/types.hpp"

namespace anoco {

/// Vectors with a norm below this are treated as carrying no direction.
inline constexpr double kNormEpsilon = 1e-12;

namespace detail {

/// Dot product accumulated in double with 32 interleaved partial sums and a
/// fixed pairwise fold. The summation order depends only on the length, never
/// on pointer alignment, so equal inputs always give bitwise-equal results.
template <typename A, typename B>
double dot(const A* a, const B* b, Index n) {
  constexpr Index kLanes = 32;
  double acc[kLanes] = {};
  Index k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    for (Index l = 0; l < kLanes; ++l) acc[l] += static_cast<double>(a[k + l]) * static_cast<double>(b[k + l]);
  }
  const Index rest = n - k;
  for (Index l = 0; l < rest; ++l) acc[l] += static_cast<double>(a[k + l]) * static_cast<double>(b[k + l]);
  for (Index width = kLanes / 2; width >= 1; width /= 2) {
    for (Index l = 0; l < width; ++l) acc[l] += acc[l + width];
  }
  return acc[0];
}

template <typename A>
double norm(const A* a, Index n) {
  return std::sqrt(dot(a, a, n));
}

inline double cosine_from_parts(double dot_uv, double norm_u, double norm_v) {
  if (norm_u < kNormEpsilon || norm_v < kNormEpsilon) return 0.0;
  return dot_uv / (norm_u * norm_v);
}

template <typename Derived>
auto contiguous(const Eigen::MatrixBase<Derived>& x) {
  using Plain = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  return Plain(x.reshaped());
}

}  // namespace detail

/// u.v / (|u| |v|), or 0 when either norm is below kNormEpsilon.
template <typename DerivedU, typename DerivedV>
double cosine_similarity(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  require(u.size() == v.size(), ErrorCode::DimensionMismatch,
          "cosine_similarity: sizes " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  const auto a = detail::contiguous(u);
  const auto b = detail::contiguous(v);
  const Index n = a.size();
  return detail::cosine_from_parts(detail::dot(a.data(), b.data(), n), detail::norm(a.data(), n),
                                   detail::norm(b.data(), n));
}

}  // namespace anoco
