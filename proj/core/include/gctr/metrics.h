#pragma once

#include <string>

#include "gctr/geometry.h"

namespace gctr {

struct RegistrationReport {
  double tm = 0.0;      // |M(est) - M(gt)|_F over the 4x4 homogeneous forms
  double log_tm = 0.0;  // natural log; -inf when tm == 0
  double r_err_deg = 0.0;  // geodesic angle between the rotations
  double t_err = 0.0;
  double s_err = 0.0;
  double runtime_seconds = 0.0;
  std::string method;
  bool converged = false;
};

// Fills the metric fields; method, runtime and convergence are left default.
RegistrationReport transform_error(const SimilarityTransform& est,
                                   const SimilarityTransform& gt);

}  // namespace gctr
