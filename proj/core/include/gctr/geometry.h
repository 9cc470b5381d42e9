#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gctr {

using Point3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;

// Ordered, non-empty list of finite points. Correspondences refer to points by
// their position in this list, so the order never changes after construction.
class PointCloud {
 public:
  explicit PointCloud(std::vector<Point3> points, std::string label = {});

  std::size_t size() const noexcept { return points_.size(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point3>& points() const noexcept { return points_; }
  std::span<const Point3> span() const noexcept { return points_; }
  const std::string& label() const noexcept { return label_; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

 private:
  std::vector<Point3> points_;
  std::string label_;
};

// p' = s * R * p + t with s > 0 and R a proper rotation.
class SimilarityTransform {
 public:
  static constexpr double kRotationTolerance = 1e-9;

  // Throws Error(kInvalidArgument) if s is not positive and finite, or if R is
  // not orthonormal with det(R) = +1 within kRotationTolerance.
  SimilarityTransform(double scale, const Matrix3& rotation,
                      const Point3& translation);

  static SimilarityTransform identity();

  double scale() const noexcept { return scale_; }
  const Matrix3& rotation() const noexcept { return rotation_; }
  const Point3& translation() const noexcept { return translation_; }

  Point3 apply(const Point3& p) const {
    return scale_ * (rotation_ * p) + translation_;
  }

  // s' = 1/s, R' = R^T, t' = -(1/s) R^T t.
  SimilarityTransform inverse() const;

  // Rotation angle of R in radians, in [0, pi].
  double rotation_angle() const;

 private:
  double scale_;
  Matrix3 rotation_;
  Point3 translation_;
};

// [[s*R, t], [0, 0, 0, 1]]. Only used for reporting and matrix metrics.
class HomogeneousMatrix4 {
 public:
  explicit HomogeneousMatrix4(const SimilarityTransform& transform);

  const Matrix4& matrix() const noexcept { return matrix_; }
  Point3 apply(const Point3& p) const;

 private:
  Matrix4 matrix_;
};

PointCloud apply_transform(const SimilarityTransform& transform,
                           const PointCloud& cloud);
std::vector<Point3> apply_transform(const SimilarityTransform& transform,
                                    std::span<const Point3> points);

// Result applies `inner` first, then `outer`:
// s = s2*s1, R = R2*R1, t = s2*R2*t1 + t2.
SimilarityTransform compose(const SimilarityTransform& outer,
                            const SimilarityTransform& inner);

// Column-major pair flattening shared by every assignment-space structure:
// alpha = i + i' * n1.
struct PairIndex {
  std::size_t i;
  std::size_t i_prime;

  friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

std::size_t flat_index(std::size_t i, std::size_t i_prime, std::size_t n1,
                       std::size_t n2);
PairIndex unflatten(std::size_t alpha, std::size_t n1, std::size_t n2);

Point3 centroid(std::span<const Point3> points);

}  // namespace gctr
