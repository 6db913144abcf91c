#pragma once

#include <Eigen/Core>

#include <span>

namespace nystrom {

/// A set of points in [0,1]^d, one point per row. Row-major so that every
/// point is a contiguous span.
using PointSet = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> point(const PointSet& X, Eigen::Index i) {
  return {X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())};
}

/// Stack the rows of `a` on top of the rows of `b`.
inline PointSet concat_rows(const PointSet& a, const PointSet& b) {
  PointSet out(a.rows() + b.rows(), a.rows() > 0 ? a.cols() : b.cols());
  if (a.rows() > 0) out.topRows(a.rows()) = a;
  if (b.rows() > 0) out.bottomRows(b.rows()) = b;
  return out;
}

}  // namespace nystrom
