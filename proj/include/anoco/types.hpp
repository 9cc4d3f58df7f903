#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "anoco/error.hpp"

namespace anoco {

using Index = Eigen::Index;

/// One feature vector per row.
template <typename Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Image-space scalar field (anomaly maps, upsampled energies).
using ImageMap = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Ground-truth defect mask, values in {0, 1}.
using BinaryMask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

/// Patch features of one query image on an H_p x W_p grid, row-major:
/// patch (r, c) lives in row r * width + c.
template <typename Scalar>
struct FeatureGrid {
  Index height = 0;
  Index width = 0;
  FeatureMatrix<Scalar> data;
  std::string image_id;

  Index size() const { return data.rows(); }
  Index dim() const { return data.cols(); }

  void validate() const {
    require(height >= 1 && width >= 1, ErrorCode::ShapeMismatch,
            "feature grid '" + image_id + "' has an empty patch grid");
    require(data.rows() == height * width, ErrorCode::ShapeMismatch,
            "feature grid '" + image_id + "' row count does not match its grid");
    require(data.cols() >= 1, ErrorCode::ShapeMismatch,
            "feature grid '" + image_id + "' has zero feature dimension");
    require(all_finite(data), ErrorCode::NonFiniteScalar,
            "feature grid '" + image_id + "' contains NaN or Inf");
  }

  template <typename Other>
  FeatureGrid<Other> cast() const {
    return {height, width, data.template cast<Other>(), image_id};
  }
};

/// Stacked normal reference patches. source_ids[j] names the file (or
/// augmented view) row j came from.
template <typename Scalar>
struct ReferencePool {
  FeatureMatrix<Scalar> data;
  std::vector<std::string> source_ids;

  Index size() const { return data.rows(); }
  Index dim() const { return data.cols(); }

  void validate() const {
    require(data.rows() >= 1, ErrorCode::EmptyPool, "reference pool is empty");
    require(data.cols() >= 1, ErrorCode::ShapeMismatch, "reference pool has zero feature dimension");
    require(source_ids.empty() || static_cast<Index>(source_ids.size()) == data.rows(),
            ErrorCode::ShapeMismatch, "reference pool provenance does not match its rows");
    require(all_finite(data), ErrorCode::NonFiniteScalar, "reference pool contains NaN or Inf");
  }

  template <typename Other>
  ReferencePool<Other> cast() const {
    return {data.template cast<Other>(), source_ids};
  }
};

}  // namespace anoco
