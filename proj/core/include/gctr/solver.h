#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gctr/affinity.h"
#include "gctr/error.h"
#include "gctr/geometry.h"

namespace gctr {

// Relaxed assignment over the flattened N1*N2 pair space: non-negative with
// unit L2 norm.
class AssignmentVector {
 public:
  static constexpr double kNormTolerance = 1e-9;

  // Rescales `values` to unit norm. Throws Error(kInvalidArgument) on negative
  // or non-finite entries and Error(kNumericalCollapse) on a (near) zero
  // vector.
  static AssignmentVector normalized(std::vector<double> values);
  static AssignmentVector uniform(std::size_t dimension);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }

 private:
  explicit AssignmentVector(std::vector<double> values)
      : values_(std::move(values)) {}

  std::vector<double> values_;
};

struct Correspondence {
  std::size_t i;        // index into the first salient set
  std::size_t i_prime;  // index into the second salient set
  double score;
};

// One-to-one, ordered by non-increasing score.
using CorrespondenceSet = std::vector<Correspondence>;

// (H3 (x) x (x) x)[alpha] with the cyclic expansion of every stored entry.
// Throws Error(kDimensionMismatch).
std::vector<double> contract_tensor(const SparseThirdOrderTensor& h3,
                                    std::span<const double> x);

// sum_{alpha,beta,gamma} H3 x x x over the expanded tensor plus sum H1 x.
double energy(const SparseThirdOrderTensor& h3, const UnaryTensor& h1,
              std::span<const double> x);

struct PowerIterationOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  // Weight of the first-order term in the update.
  double unary_weight = 1.0;
  // When set, the first-order term is rescaled every step to unary_weight
  // times the norm of the third-order contraction, so neither term swamps the
  // other regardless of how concentrated the iterate is.
  bool balance_terms = false;
};

struct PowerIterationResult {
  AssignmentVector x;
  int iterations;
  bool converged;
};

// x <- normalize(H3 (x) x (x) x + w * H1) until |x_{m+1} - x_m| < tolerance.
PowerIterationResult power_iteration(const SparseThirdOrderTensor& h3,
                                     const UnaryTensor& h1,
                                     const AssignmentVector& x0,
                                     const PowerIterationOptions& options = {});

// Greedy one-to-one rounding: repeatedly takes the largest remaining entry
// (ties to the smaller flat index) and removes its row and column. Throws
// Error(kInsufficientMatches) if fewer than three pairs result.
CorrespondenceSet discretize(std::span<const double> x, std::size_t n1,
                             std::size_t n2, std::size_t top_r);

struct RansacOptions {
  int iterations = 512;
  double inlier_tolerance = 0.05;
  std::uint64_t seed = 0;
};

// Minimal three-pair similarity hypotheses scored by consensus size; residual
// of a pair is |s*R*b + t - a|. The winning consensus is refit once and
// recounted. Inliers come back in candidate order. Throws Error(kNoConsensus)
// when no hypothesis gathers three inliers.
CorrespondenceSet ransac_filter(const CorrespondenceSet& candidates,
                                std::span<const Point3> pts1,
                                std::span<const Point3> pts2,
                                const RansacOptions& options);

// Mean ratio of consecutive edge lengths |A_i - A_{i+1}| / |B_i - B_{i+1}|.
// Throws Error(kZeroEdge) if a B edge is shorter than 1e-12.
double estimate_scale(std::span<const Point3> a, std::span<const Point3> b);

// Least-squares R, t for a fixed scale so that s*R*b + t ~ a, with the
// reflection guard D = diag(1, 1, det(U V^T)). Throws
// Error(kDegenerateConfiguration) if the cross-covariance has rank < 2.
SimilarityTransform estimate_transform(std::span<const Point3> a,
                                       std::span<const Point3> b, double scale);

// Splits a correspondence set into matched point lists.
void gather_pairs(const CorrespondenceSet& pairs, std::span<const Point3> pts1,
                  std::span<const Point3> pts2, std::vector<Point3>& a,
                  std::vector<Point3>& b);

}  // namespace gctr
