#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gctr/geometry.h"

namespace gctr {

struct IcpConfig {
  int max_iters = 100;
  // Stop when the residual changes by less than convergence_tol * diameter(C1).
  double convergence_tol = 1e-10;
  double max_correspondence_dist = 0.0;  // 0: 0.25 * diameter(C1)
  std::uint64_t seed = 0;  // unused by the deterministic variant; kept for config symmetry
  // Clouds above the threshold are uniformly strided down to about the target.
  std::size_t downsample_threshold = 20'000;
  std::size_t downsample_target = 2'000;

  void validate() const;
};

struct IcpResult {
  // Maps c2 onto c1, including the containing-box scale normalization.
  SimilarityTransform transform;
  // sqrt(mean(min(d^2, tau^2))) over c2 points after the last iteration, with
  // d the nearest-neighbor distance in c1 and tau the rejection distance.
  double mean_residual;
  int iterations;
  // Residual after each iteration; non-increasing.
  std::vector<double> residual_trace;
};

// Point-to-point ICP with a rigid fit inside the loop. The scale is fixed up
// front by matching containing-box diameters.
IcpResult icp_register(const PointCloud& c1, const PointCloud& c2,
                       const IcpConfig& cfg = {});

}  // namespace gctr
