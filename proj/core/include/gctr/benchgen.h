#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "gctr/geometry.h"

namespace gctr {

// Perturbations separating two simulated sensors observing the same surface.
// Noise sigmas are fractions of the base cloud's box diameter.
struct CrossSourceSpec {
  double density_keep_a = 1.0;
  double density_keep_b = 1.0;
  double noise_sigma_a = 0.0;
  double noise_sigma_b = 0.0;
  double outlier_frac = 0.0;  // of B, replaced by uniform samples
  double crop_frac = 0.0;     // of B, removed by a half-space cut
  SimilarityTransform transform = SimilarityTransform::identity();  // A -> B
  std::uint64_t seed = 0;
  // Draw both subsamples from one random stream (equal keep fractions then
  // select identical subsets).
  bool shared_subsampling = false;

  void validate() const;
};

struct BenchmarkPair {
  PointCloud cloud_a;
  PointCloud cloud_b;
  // The planted transform: before cropping and outliers, B = T(subset of A).
  // Registration of B onto A should therefore recover ground_truth.inverse().
  SimilarityTransform ground_truth;
  CrossSourceSpec spec;
};

inline constexpr std::size_t kMinBenchmarkPoints = 50;

// Throws Error(kTooFewPoints) if a stage leaves fewer than 50 points and
// Error(kInvalidArgument) for a base cloud under 100 points or a bad spec.
BenchmarkPair generate_pair(const PointCloud& base, const CrossSourceSpec& spec);

// Closed-form test surfaces, sampled uniformly by area:
//   "sphere"        unit sphere
//   "torus"         major radius 1; the tube radius and the height of the ring
//                   vary with the ring angle so that no rotation maps the
//                   surface onto itself
//   "bumpy_sphere"  unit sphere with an asymmetric radial bump field
//   "l_shell"       boundary of an L-shaped prism with unequal arms
// Throws Error(kUnknownShape).
PointCloud builtin_shape(std::string_view name, std::size_t n,
                         std::uint64_t seed);

inline constexpr std::array<std::string_view, 4> kBuiltinShapes{
    "sphere", "torus", "bumpy_sphere", "l_shell"};

inline constexpr double kTorusMajorRadius = 1.0;
// Tube radius and ring-center height of the "torus" shape at ring angle u.
double torus_tube_radius(double u);
double torus_ring_height(double u);

// Haar-uniform rotation.
Matrix3 random_rotation(std::uint64_t seed);

}  // namespace gctr
