#include "gctr/solver.h"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace gctr {

AssignmentVector AssignmentVector::normalized(std::vector<double> values) {
  double sq = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "assignment entries must be finite and non-negative");
    }
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (!(norm >= 1e-300)) {
    throw Error(ErrorCode::kNumericalCollapse, "assignment vector vanished");
  }
  for (double& v : values) v /= norm;
  return AssignmentVector(std::move(values));
}

AssignmentVector AssignmentVector::uniform(std::size_t dimension) {
  if (dimension == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty assignment space");
  }
  return AssignmentVector(std::vector<double>(
      dimension, 1.0 / std::sqrt(static_cast<double>(dimension))));
}

std::vector<double> contract_tensor(const SparseThirdOrderTensor& h3,
                                    std::span<const double> x) {
  if (x.size() != h3.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector of size " + std::to_string(x.size()) +
                    " against tensor dimension " +
                    std::to_string(h3.dimension()));
  }
  std::vector<double> out(x.size(), 0.0);
  for (const auto& e : h3.entries) {
    const double xa = x[e.alpha];
    const double xb = x[e.beta];
    const double xc = x[e.gamma];
    out[e.alpha] += e.value * xb * xc;
    out[e.beta] += e.value * xc * xa;
    out[e.gamma] += e.value * xa * xb;
  }
  return out;
}

double energy(const SparseThirdOrderTensor& h3, const UnaryTensor& h1,
              std::span<const double> x) {
  if (x.size() != h3.dimension() || x.size() != h1.values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "energy operands disagree");
  }
  double third = 0.0;
  for (const auto& e : h3.entries) {
    third += e.value * x[e.alpha] * x[e.beta] * x[e.gamma];
  }
  double first = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) first += h1.values[k] * x[k];
  // Each stored entry is three tensor elements with the same product.
  return 3.0 * third + first;
}

PowerIterationResult power_iteration(const SparseThirdOrderTensor& h3,
                                     const UnaryTensor& h1,
                                     const AssignmentVector& x0,
                                     const PowerIterationOptions& options) {
  if (x0.size() != h3.dimension() || x0.size() != h1.values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "power iteration operands disagree");
  }
  if (options.max_iterations < 1 || !(options.tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad power iteration options");
  }
  double h1_norm = 0.0;
  for (double v : h1.values) h1_norm += v * v;
  h1_norm = std::sqrt(h1_norm);

  AssignmentVector x = x0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::vector<double> y = contract_tensor(h3, x.values());
    double weight = options.unary_weight;
    if (options.balance_terms && h1_norm > 0.0) {
      double y_norm = 0.0;
      for (double v : y) y_norm += v * v;
      y_norm = std::sqrt(y_norm);
      if (y_norm > 0.0) weight = options.unary_weight * y_norm / h1_norm;
    }
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += weight * h1.values[k];

    AssignmentVector next = AssignmentVector::normalized(std::move(y));
    double delta = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      const double d = next[k] - x[k];
      delta += d * d;
    }
    x = std::move(next);
    if (std::sqrt(delta) < options.tolerance) return {std::move(x), it, true};
  }
  return {std::move(x), options.max_iterations, false};
}

CorrespondenceSet discretize(std::span<const double> x, std::size_t n1,
                             std::size_t n2, std::size_t top_r) {
  if (x.size() != n1 * n2) {
    throw Error(ErrorCode::kDimensionMismatch, "assignment size != n1*n2");
  }
  if (top_r < 3) {
    throw Error(ErrorCode::kInvalidArgument, "top_r must be >= 3");
  }
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] > x[b] : a < b;
  });
  std::vector<bool> row_used(n1, false);
  std::vector<bool> col_used(n2, false);
  CorrespondenceSet out;
  const std::size_t limit = std::min({top_r, n1, n2});
  for (std::size_t alpha : order) {
    if (out.size() >= limit) break;
    const PairIndex p = unflatten(alpha, n1, n2);
    if (row_used[p.i] || col_used[p.i_prime]) continue;
    row_used[p.i] = true;
    col_used[p.i_prime] = true;
    out.push_back({p.i, p.i_prime, x[alpha]});
  }
  if (out.size() < 3) {
    throw Error(ErrorCode::kInsufficientMatches,
                "only " + std::to_string(out.size()) + " one-to-one pairs");
  }
  return out;
}

void gather_pairs(const CorrespondenceSet& pairs, std::span<const Point3> pts1,
                  std::span<const Point3> pts2, std::vector<Point3>& a,
                  std::vector<Point3>& b) {
  a.clear();
  b.clear();
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  for (const auto& c : pairs) {
    a.push_back(pts1[c.i]);
    b.push_back(pts2[c.i_prime]);
  }
}

double estimate_scale(std::span<const Point3> a, std::span<const Point3> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "scale needs two equally sized lists of >= 2 points");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    const double rb = (b[k] - b[k + 1]).norm();
    if (rb < 1e-12) {
      throw Error(ErrorCode::kZeroEdge,
                  "B edge " + std::to_string(k) + " has zero length");
    }
    sum += (a[k] - a[k + 1]).norm() / rb;
  }
  return sum / static_cast<double>(a.size() - 1);
}

SimilarityTransform estimate_transform(std::span<const Point3> a,
                                       std::span<const Point3> b,
                                       double scale) {
  if (a.size() != b.size() || a.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "transform needs two equally sized lists of >= 3 points");
  }
  const Point3 mean_a = centroid(a);
  const Point3 mean_b = centroid(b);
  Matrix3 cross = Matrix3::Zero();
  for (std::size_t k = 0; k < a.size(); ++k) {
    cross += (a[k] - mean_a) * (b[k] - mean_b).transpose();
  }
  const Eigen::JacobiSVD<Matrix3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Point3 sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "cross-covariance rank below 2");
  }
  const Matrix3& u = svd.matrixU();
  const Matrix3& v = svd.matrixV();
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Matrix3 rotation = u * d * v.transpose();
  return {scale, rotation, mean_a - scale * (rotation * mean_b)};
}

namespace {

std::vector<std::size_t> count_inliers(const SimilarityTransform& t,
                                       const CorrespondenceSet& candidates,
                                       std::span<const Point3> pts1,
                                       std::span<const Point3> pts2,
                                       double tolerance) {
  std::vector<std::size_t> inliers;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& c = candidates[k];
    if ((t.apply(pts2[c.i_prime]) - pts1[c.i]).norm() < tolerance) {
      inliers.push_back(k);
    }
  }
  return inliers;
}

std::optional<SimilarityTransform> fit(const CorrespondenceSet& candidates,
                                       std::span<const std::size_t> subset,
                                       std::span<const Point3> pts1,
                                       std::span<const Point3> pts2) {
  std::vector<Point3> a;
  std::vector<Point3> b;
  for (std::size_t k : subset) {
    a.push_back(pts1[candidates[k].i]);
    b.push_back(pts2[candidates[k].i_prime]);
  }
  try {
    return estimate_transform(a, b, estimate_scale(a, b));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

CorrespondenceSet ransac_filter(const CorrespondenceSet& candidates,
                                std::span<const Point3> pts1,
                                std::span<const Point3> pts2,
                                const RansacOptions& options) {
  if (candidates.size() < 3) {
    throw Error(ErrorCode::kInsufficientMatches, "RANSAC needs >= 3 candidates");
  }
  if (options.iterations < 1 || !(options.inlier_tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad RANSAC options");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  std::vector<std::size_t> best;
  const int iterations = candidates.size() == 3 ? 1 : options.iterations;
  for (int it = 0; it < iterations; ++it) {
    std::array<std::size_t, 3> sample{0, 1, 2};
    if (candidates.size() > 3) {
      sample[0] = pick(rng);
      do sample[1] = pick(rng); while (sample[1] == sample[0]);
      do sample[2] = pick(rng); while (sample[2] == sample[0] || sample[2] == sample[1]);
    }
    const auto model = fit(candidates, sample, pts1, pts2);
    if (!model) continue;
    auto inliers = count_inliers(*model, candidates, pts1, pts2,
                                 options.inlier_tolerance);
    if (inliers.size() > best.size()) {
      best = std::move(inliers);
      if (best.size() == candidates.size()) break;
    }
  }
  if (best.size() >= 3) {
    if (const auto refit = fit(candidates, best, pts1, pts2)) {
      auto inliers = count_inliers(*refit, candidates, pts1, pts2,
                                   options.inlier_tolerance);
      if (inliers.size() > best.size()) best = std::move(inliers);
    }
  }
  if (best.size() < 3) {
    throw Error(ErrorCode::kNoConsensus,
                "best hypothesis has " + std::to_string(best.size()) +
                    " inliers");
  }
  CorrespondenceSet out;
  out.reserve(best.size());
  for (std::size_t k : best) out.push_back(candidates[k]);
  return out;
}

}  // namespace gctr
