#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gctr/geometry.h"
#include "gctr/kdtree.h"
#include "gctr/preprocess.h"

namespace gctr {

// Three distinct indices into a salient point list. The vertex order matters:
// two triplets are compared position by position.
struct Triplet {
  std::array<std::size_t, 3> idx;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Cosines of the interior angles at the first, second and third vertex.
struct TripletDescriptor {
  std::array<double, 3> cosines;

  Point3 as_point() const { return {cosines[0], cosines[1], cosines[2]}; }
};

// Throws Error(kDegenerateTriangle) for coincident or collinear vertices.
TripletDescriptor triplet_descriptor(const Point3& p_i, const Point3& p_j,
                                     const Point3& p_k);

// Overlap ratios searched when the true overlap is unknown.
inline constexpr std::array<double, 4> kOverlapRatios{0.25, 0.5, 0.75, 1.0};
bool is_supported_overlap_ratio(double ratio);

// Random distinct triangles whose three edges all exceed
// 0.5 * overlap_ratio * diameter. Small point sets are enumerated exhaustively
// and shuffled; large ones are rejection sampled with a bounded budget, so
// fewer than `count` triplets may come back. Deterministic for a given seed.
// Throws Error(kNoValidTriplet) when nothing qualifies.
std::vector<Triplet> select_wide_baseline_triplets(
    std::span<const Point3> points, std::size_t count, double overlap_ratio,
    const BoundingDiameter& diameter, std::uint64_t seed);

// First-order tensor: values[i + i' * n1] = exp(-|p_i - p_i'|^2 / sigma^2).
struct UnaryTensor {
  std::vector<double> values;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

UnaryTensor build_unary_tensor(std::span<const Point3> c1,
                               std::span<const Point3> c2, double sigma);

struct TensorEntry {
  std::uint32_t alpha;
  std::uint32_t beta;
  std::uint32_t gamma;
  double value;
};

// Sparse supersymmetric third-order tensor over the flattened assignment
// space. Each stored entry stands for its three cyclic rotations
// (alpha, beta, gamma), (beta, gamma, alpha), (gamma, alpha, beta); the
// contraction and the energy expand them, nothing else does.
struct SparseThirdOrderTensor {
  std::vector<TensorEntry> entries;
  std::size_t n1 = 0;
  std::size_t n2 = 0;

  std::size_t dimension() const noexcept { return n1 * n2; }
};

// Descriptor index over every vertex ordering of a set of triangles, so that a
// query matches a triangle regardless of how its vertices were listed.
class TripletPool {
 public:
  struct Match {
    Triplet ordered;
    double squared_distance;
  };

  // Degenerate triangles are skipped.
  TripletPool(std::span<const Point3> points, std::span<const Triplet> triplets);

  std::size_t size() const noexcept { return ordered_.size(); }
  bool empty() const noexcept { return ordered_.empty(); }

  std::vector<Match> nearest(const TripletDescriptor& query,
                             std::size_t k) const;

 private:
  std::vector<Triplet> ordered_;
  KdTree tree_;
};

// For each c1 triplet, stores one entry per nearest pool match with value
// exp(-|d1 - d2|^2 / sigma_t^2), at the flat indices pairing vertices by
// position. Throws Error(kEmptyPool) if the pool is empty.
SparseThirdOrderTensor build_third_order_tensor(
    std::span<const Point3> s1, std::span<const Triplet> c1_triplets,
    std::span<const Point3> s2, const TripletPool& pool, std::size_t knn,
    double sigma_t);

}  // namespace gctr
