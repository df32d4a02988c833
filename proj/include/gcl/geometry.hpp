#pragma once

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gcl/error.hpp"

namespace gcl {

using Point = Eigen::Vector2d;

enum class ArcDirection { CW, CCW };

/// Circular arc in the XY plane; the center is given as an offset from start.
struct ArcSpec {
  Point start = Point::Zero();
  Point end = Point::Zero();
  Point center_offset = Point::Zero();
  ArcDirection direction = ArcDirection::CCW;

  Point center() const { return start + center_offset; }
};

inline constexpr double kDefaultChordTolerance = 0.1;
inline constexpr int kMinSamplesPerCircle = 8;

/// Densifies an arc so that no chord's sagitta exceeds `chord_tol`, with at
/// least kMinSamplesPerCircle samples per full turn. The start point is not
/// emitted; the end point is (exactly). start == end means a full circle.
std::vector<Point> sample_arc(const ArcSpec& arc, double chord_tol = kDefaultChordTolerance);

/// Column view over a contiguous list of points, so point lists can be handed
/// straight to the Eigen-templated set metrics below.
inline Eigen::Map<const Eigen::Matrix2Xd> as_columns(std::span<const Point> points) {
  return {points.empty() ? nullptr : points.data()->data(), 2,
          static_cast<Eigen::Index>(points.size())};
}

/// max over columns a of A of min over columns b of B of |a - b|.
///
/// Exact: the inner minimum is taken over squared distances and a column of A
/// is abandoned as soon as it cannot raise the running maximum.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar directed_hausdorff(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  static_assert(DerivedA::RowsAtCompileTime == Eigen::Dynamic || DerivedA::RowsAtCompileTime == 2);
  if (a.cols() == 0 || b.cols() == 0) {
    throw Error(ErrorCode::EmptySet, "Hausdorff distance of an empty point set");
  }
  Scalar best_sq = 0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    Scalar nearest_sq = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      const Scalar d = (a.col(i) - b.col(j)).squaredNorm();
      if (d < nearest_sq) {
        nearest_sq = d;
        if (nearest_sq <= best_sq) break;
      }
    }
    if (nearest_sq > best_sq) best_sq = nearest_sq;
  }
  using std::sqrt;
  return sqrt(best_sq);
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar hausdorff(const Eigen::MatrixBase<DerivedA>& a,
                                    const Eigen::MatrixBase<DerivedB>& b) {
  using std::max;
  return max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

inline double directed_hausdorff(std::span<const Point> a, std::span<const Point> b) {
  return directed_hausdorff(as_columns(a), as_columns(b));
}

inline double hausdorff(std::span<const Point> a, std::span<const Point> b) {
  return hausdorff(as_columns(a), as_columns(b));
}

}  // namespace gcl
