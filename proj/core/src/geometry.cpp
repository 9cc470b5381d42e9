#include "gctr/geometry.h"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

#include "gctr/error.h"

namespace gctr {

PointCloud::PointCloud(std::vector<Point3> points, std::string label)
    : points_(std::move(points)), label_(std::move(label)) {
  if (points_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "point cloud must not be empty");
  }
  for (std::size_t k = 0; k < points_.size(); ++k) {
    if (!points_[k].allFinite()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "point " + std::to_string(k) + " has a non-finite coordinate");
    }
  }
}

SimilarityTransform::SimilarityTransform(double scale, const Matrix3& rotation,
                                         const Point3& translation)
    : scale_(scale), rotation_(rotation), translation_(translation) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument,
                "scale must be positive and finite");
  }
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument,
                "rotation and translation must be finite");
  }
  const double ortho_error =
      (rotation.transpose() * rotation - Matrix3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_error > kRotationTolerance ||
      std::abs(rotation.determinant() - 1.0) > kRotationTolerance) {
    throw Error(ErrorCode::kInvalidArgument,
                "rotation must be orthonormal with determinant +1");
  }
}

SimilarityTransform SimilarityTransform::identity() {
  return {1.0, Matrix3::Identity(), Point3::Zero()};
}

SimilarityTransform SimilarityTransform::inverse() const {
  const Matrix3 rt = rotation_.transpose();
  return {1.0 / scale_, rt, -(rt * translation_) / scale_};
}

double SimilarityTransform::rotation_angle() const {
  const double c = std::clamp((rotation_.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

HomogeneousMatrix4::HomogeneousMatrix4(const SimilarityTransform& transform)
    : matrix_(Matrix4::Identity()) {
  matrix_.topLeftCorner<3, 3>() = transform.scale() * transform.rotation();
  matrix_.topRightCorner<3, 1>() = transform.translation();
}

Point3 HomogeneousMatrix4::apply(const Point3& p) const {
  const Eigen::Vector4d h = matrix_ * p.homogeneous();
  return h.head<3>();
}

std::vector<Point3> apply_transform(const SimilarityTransform& transform,
                                    std::span<const Point3> points) {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(transform.apply(p));
  return out;
}

PointCloud apply_transform(const SimilarityTransform& transform,
                           const PointCloud& cloud) {
  return PointCloud(apply_transform(transform, cloud.span()), cloud.label());
}

SimilarityTransform compose(const SimilarityTransform& outer,
                            const SimilarityTransform& inner) {
  return {outer.scale() * inner.scale(), outer.rotation() * inner.rotation(),
          outer.scale() * (outer.rotation() * inner.translation()) +
              outer.translation()};
}

std::size_t flat_index(std::size_t i, std::size_t i_prime, std::size_t n1,
                       std::size_t n2) {
  if (i >= n1 || i_prime >= n2) {
    throw Error(ErrorCode::kInvalidArgument,
                "pair (" + std::to_string(i) + ", " + std::to_string(i_prime) +
                    ") outside " + std::to_string(n1) + "x" + std::to_string(n2));
  }
  return i + i_prime * n1;
}

PairIndex unflatten(std::size_t alpha, std::size_t n1, std::size_t n2) {
  if (n1 == 0 || alpha >= n1 * n2) {
    throw Error(ErrorCode::kInvalidArgument,
                "flat index " + std::to_string(alpha) + " out of range");
  }
  return {alpha % n1, alpha / n1};
}

Point3 centroid(std::span<const Point3> points) {
  Point3 sum = Point3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Point3(sum / static_cast<double>(points.size()));
}

}  // namespace gctr
