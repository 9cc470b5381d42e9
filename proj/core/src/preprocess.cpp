#include "gctr/preprocess.h"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "gctr/error.h"
#include "gctr/kdtree.h"

namespace gctr {

GridFrame GridFrame::anchored_at(const Point3& origin) {
  GridFrame frame;
  frame.origin = origin;
  return frame;
}

GridFrame principal_frame(std::span<const Point3> points) {
  GridFrame frame;
  frame.origin = centroid(points);
  Matrix3 cov = Matrix3::Zero();
  for (const auto& p : points) {
    const Point3 d = p - frame.origin;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  // Eigenvalues ascend; frame rows take them in descending order.
  for (int r = 0; r < 3; ++r) {
    frame.axes.row(r) = eig.eigenvectors().col(2 - r).transpose();
  }
  if (frame.axes.determinant() < 0.0) frame.axes.row(2) *= -1.0;
  return frame;
}

BoundingDiameter containing_box(std::span<const Point3> points) {
  return containing_box(points, GridFrame{});
}

BoundingDiameter containing_box(const PointCloud& cloud) {
  return containing_box(cloud.span());
}

BoundingDiameter containing_box(std::span<const Point3> points,
                                const GridFrame& frame) {
  if (points.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "containing_box of empty set");
  }
  const bool identity = frame.axes == Matrix3::Identity() &&
                        frame.origin == Point3::Zero();
  auto local = [&](const Point3& p) -> Point3 {
    return identity ? p : frame.to_local(p);
  };
  Point3 lo = local(points.front());
  Point3 hi = lo;
  for (const auto& p : points) {
    const Point3 q = local(p);
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  const double diameter = (hi - lo).norm();
  if (!(diameter > 0.0)) {
    throw Error(ErrorCode::kZeroDiameter, "all points coincide");
  }
  return {lo, hi, diameter};
}

SalientStructure extract_salient_points(const PointCloud& cloud,
                                        double cell_size) {
  Point3 lo = cloud[0];
  for (const auto& p : cloud) lo = lo.cwiseMin(p);
  return extract_salient_points(cloud, cell_size, GridFrame::anchored_at(lo));
}

SalientStructure extract_salient_points(const PointCloud& cloud,
                                        double cell_size,
                                        const GridFrame& frame) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error(ErrorCode::kInvalidArgument, "cell_size must be positive");
  }
  using Key = std::array<std::int64_t, 3>;
  std::vector<Key> keys(cloud.size());
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Point3 q = frame.to_local(cloud[k]) / cell_size;
    keys[k] = {static_cast<std::int64_t>(std::floor(q.x())),
               static_cast<std::int64_t>(std::floor(q.y())),
               static_cast<std::int64_t>(std::floor(q.z()))};
  }
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] < keys[b];
  });

  SalientStructure out;
  out.cell_size = cell_size;
  for (std::size_t m = 0; m < order.size();) {
    std::size_t n = m;
    std::vector<std::size_t> members;
    Point3 sum = Point3::Zero();
    while (n < order.size() && keys[order[n]] == keys[order[m]]) {
      members.push_back(order[n]);
      sum += cloud[order[n]];
      ++n;
    }
    std::sort(members.begin(), members.end());
    out.points.push_back(sum / static_cast<double>(members.size()));
    out.source_indices.push_back(std::move(members));
    m = n;
  }
  if (out.size() < 4) {
    throw Error(ErrorCode::kDegenerateCloud,
                "only " + std::to_string(out.size()) +
                    " occupied cells; shrink cell_size");
  }
  return out;
}

SalientStructure extract_salient_points_adaptive(const PointCloud& cloud,
                                                 double initial_cell_size,
                                                 const GridFrame& frame,
                                                 int max_halvings) {
  double cell = initial_cell_size;
  for (int attempt = 0;; ++attempt) {
    try {
      return extract_salient_points(cloud, cell, frame);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateCloud || attempt >= max_halvings) {
        throw;
      }
      cell *= 0.5;
    }
  }
}

SalientStructure prune_sparse_segments(const SalientStructure& salient,
                                       std::size_t min_points) {
  SalientStructure out;
  out.cell_size = salient.cell_size;
  for (std::size_t k = 0; k < salient.size(); ++k) {
    if (salient.source_indices[k].size() >= min_points) {
      out.points.push_back(salient.points[k]);
      out.source_indices.push_back(salient.source_indices[k]);
    }
  }
  if (out.size() < 4) {
    throw Error(ErrorCode::kDegenerateCloud,
                "fewer than four segments hold at least " +
                    std::to_string(min_points) + " points");
  }
  return out;
}

PointCloud remove_statistical_outliers(const PointCloud& cloud, std::size_t k,
                                       double std_ratio) {
  if (k == 0 || !(std_ratio >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "outlier filter needs k >= 1 and std_ratio >= 0");
  }
  if (cloud.size() <= k) return cloud;
  const KdTree tree(cloud.points());
  std::vector<double> mean_dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    // The query point itself comes back first at distance zero.
    const auto neighbors = tree.knn(cloud[i], k + 1);
    double sum = 0.0;
    for (std::size_t n = 1; n < neighbors.size(); ++n) {
      sum += std::sqrt(neighbors[n].squared_distance);
    }
    mean_dist[i] = sum / static_cast<double>(neighbors.size() - 1);
  }
  double mean = 0.0;
  for (double d : mean_dist) mean += d;
  mean /= static_cast<double>(mean_dist.size());
  double var = 0.0;
  for (double d : mean_dist) var += (d - mean) * (d - mean);
  const double limit = mean + std_ratio * std::sqrt(var / static_cast<double>(mean_dist.size()));

  std::vector<Point3> kept;
  kept.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (mean_dist[i] <= limit) kept.push_back(cloud[i]);
  }
  return PointCloud(std::move(kept), cloud.label());
}

ScaleNormalization normalize_scale_pair(const PointCloud& c1,
                                        const PointCloud& c2) {
  const BoundingDiameter b1 = containing_box(c1);
  const BoundingDiameter b2 = containing_box(c2);
  const double k = b1.diameter / b2.diameter;
  if (k == 1.0) {
    return {c2, 1.0, SimilarityTransform::identity()};
  }
  const Point3 center = 0.5 * (b2.min_corner + b2.max_corner);
  SimilarityTransform transform(k, Matrix3::Identity(), center - k * center);
  std::vector<Point3> scaled;
  scaled.reserve(c2.size());
  for (const auto& p : c2) scaled.push_back(center + k * (p - center));
  return {PointCloud(std::move(scaled), c2.label()), k, transform};
}

}  // namespace gctr
