#include "gctr/icp.h"

#include <algorithm>
#include <cmath>

#include "gctr/error.h"
#include "gctr/kdtree.h"
#include "gctr/preprocess.h"
#include "gctr/solver.h"

namespace gctr {
namespace {

std::vector<Point3> stride_downsample(std::span<const Point3> points,
                                      const IcpConfig& cfg) {
  if (points.size() <= cfg.downsample_threshold) {
    return {points.begin(), points.end()};
  }
  const std::size_t stride =
      (points.size() + cfg.downsample_target - 1) / cfg.downsample_target;
  std::vector<Point3> out;
  for (std::size_t k = 0; k < points.size(); k += stride) out.push_back(points[k]);
  return out;
}

double truncated_residual(const KdTree& tree, std::span<const Point3> moving,
                          double tau) {
  double sum = 0.0;
  for (const auto& p : moving) {
    sum += std::min(tree.nearest(p).squared_distance, tau * tau);
  }
  return std::sqrt(sum / static_cast<double>(moving.size()));
}

}  // namespace

void IcpConfig::validate() const {
  if (max_iters < 1 || !(convergence_tol > 0.0) || max_correspondence_dist < 0.0 ||
      downsample_target == 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid ICP configuration");
  }
}

IcpResult icp_register(const PointCloud& c1, const PointCloud& c2,
                       const IcpConfig& cfg) {
  cfg.validate();
  const ScaleNormalization normalized = normalize_scale_pair(c1, c2);
  const double diameter = containing_box(c1).diameter;
  const double tau = cfg.max_correspondence_dist > 0.0 ? cfg.max_correspondence_dist
                                                       : 0.25 * diameter;

  const KdTree tree(stride_downsample(c1.span(), cfg));
  std::vector<Point3> moving = stride_downsample(normalized.scaled.span(), cfg);

  IcpResult result{normalized.transform, truncated_residual(tree, moving, tau), 0, {}};
  std::vector<Point3> a;
  std::vector<Point3> b;
  for (int it = 0; it < cfg.max_iters; ++it) {
    a.clear();
    b.clear();
    for (const auto& p : moving) {
      const Neighbor nb = tree.nearest(p);
      if (nb.squared_distance < tau * tau) {
        a.push_back(tree.point(nb.index));
        b.push_back(p);
      }
    }
    if (a.size() < 3) {
      throw Error(ErrorCode::kDegenerateConfiguration,
                  "fewer than three correspondences within the rejection distance");
    }
    const SimilarityTransform step = estimate_transform(a, b, 1.0);
    moving = apply_transform(step, moving);
    result.transform = compose(step, result.transform);

    const double previous = result.mean_residual;
    result.mean_residual = truncated_residual(tree, moving, tau);
    result.residual_trace.push_back(result.mean_residual);
    result.iterations = it + 1;
    if (std::abs(previous - result.mean_residual) < cfg.convergence_tol * diameter) {
      break;
    }
  }
  return result;
}

}  // namespace gctr
