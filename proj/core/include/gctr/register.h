#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gctr/error.h"
#include "gctr/geometry.h"
#include "gctr/solver.h"

namespace gctr {

enum class SalientFrame {
  kAxisAligned,  // grid anchored at the cloud's min corner
  kPrincipal,    // grid along principal axes, anchored at the centroid
};

// Zero-valued sizes and tolerances are resolved from the clouds at run time
// (see the field comments); everything else is used as given.
struct GctrConfig {
  // Input cleanup: statistical outlier removal before salient extraction
  // (outlier_k = 0 disables it).
  std::size_t outlier_k = 16;
  double outlier_std_ratio = 2.0;

  // Salient extraction.
  SalientFrame salient_frame = SalientFrame::kPrincipal;
  double cell_size = 0.0;          // 0: principal diameter / cell_divisions
  double cell_divisions = 10.0;
  double min_segment_fraction = 0.2;  // of the median segment population
  // After the first outer iteration, rebuild C2's salient points from the
  // warped cloud on C1's grid instead of warping the previous ones.
  bool regrid_moving = true;
  // Runs per overlap ratio. Each run other than the very first offsets C2's
  // initial grid by a seeded fraction of a cell, so that runs do not share
  // the same binning accident.
  int restarts = 2;
  // Extra passes on grids with the cell (and sigma) halved each time, run on
  // the best coarse result only.
  int refine_levels = 2;
  // Passes at the finest cell with C2 binned on its own principal grid. Each
  // pass is kept only if it lowers the nearest-neighbor residual.
  int polish_passes = 2;

  // Tensors.
  std::size_t triplet_count = 5000;
  std::size_t pool_factor = 4;
  std::size_t knn = 32;
  double sigma = 0.0;  // 0: 0.1 * diameter(C1)
  double sigma_t = 0.3;

  // Power iteration.
  double power_tol = 1e-8;
  int power_max_iters = 100;
  double unary_weight = 1.0;
  // Unary weight on the first outer iteration, before the clouds share a
  // frame; raw coordinates then say nothing about correspondence.
  double initial_unary_weight = 0.0;
  bool balance_terms = true;

  // Outer loop.
  double outer_tol = 1e-3;
  int outer_max_iters = 30;

  // Discretization and RANSAC.
  std::size_t top_r = 0;  // 0: min(N1, N2)
  int ransac_iters = 512;
  double ransac_inlier_tol = 0.0;  // 0: 0.05 * diameter(C1)

  std::vector<double> overlap_ratios{0.25, 0.5, 0.75, 1.0};
  std::uint64_t seed = 0;

  // Throws Error(kInvalidArgument) describing the first violated constraint.
  void validate() const;
};

struct GctrResult {
  // Maps the second cloud onto the first, composed over all outer iterations.
  SimilarityTransform transform = SimilarityTransform::identity();
  // Final-iteration RANSAC inliers, indexing the salient sets below.
  CorrespondenceSet correspondences;
  std::vector<double> energy_trace;
  int iterations = 0;
  bool converged = false;

  double overlap_ratio = 0.0;
  // Salient points of the final iteration; salient2 is expressed in the
  // input frame of the second cloud.
  std::vector<Point3> salient1;
  std::vector<Point3> salient2;
};

// Raised when no overlap ratio produced a usable run; carries the best partial
// result (possibly the identity with no iterations).
class RegistrationError : public Error {
 public:
  RegistrationError(ErrorCode code, const std::string& message,
                    GctrResult partial)
      : Error(code, message), partial_(std::move(partial)) {}

  const GctrResult& partial() const noexcept { return partial_; }

 private:
  GctrResult partial_;
};

// Estimates the similarity transform mapping c2 onto c1 by alternating tensor
// power iteration for correspondences with closed-form transform estimation.
// Deterministic for a fixed cfg.seed.
GctrResult gctr_register(const PointCloud& c1, const PointCloud& c2,
                         const GctrConfig& cfg = {});

}  // namespace gctr
