#include "gctr/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gctr {

RegistrationReport transform_error(const SimilarityTransform& est,
                                   const SimilarityTransform& gt) {
  RegistrationReport report;
  report.tm = (HomogeneousMatrix4(est).matrix() - HomogeneousMatrix4(gt).matrix()).norm();
  report.log_tm = report.tm > 0.0 ? std::log(report.tm)
                                  : -std::numeric_limits<double>::infinity();
  // |R1 - R2|_F = 2 sqrt(2) sin(theta / 2): exact zero for equal rotations and
  // well conditioned for small angles, unlike the arccos of the trace.
  const double chord = (est.rotation() - gt.rotation()).norm() / (2.0 * std::numbers::sqrt2);
  report.r_err_deg = 2.0 * std::asin(std::min(chord, 1.0)) * 180.0 / std::numbers::pi;
  report.t_err = (est.translation() - gt.translation()).norm();
  report.s_err = std::abs(est.scale() - gt.scale());
  return report;
}

}  // namespace gctr
