#include "gctr/benchgen.h"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gctr/error.h"
#include "gctr/preprocess.h"

namespace gctr {
namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Point3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Point3 d(normal(rng), normal(rng), normal(rng));
    const double n = d.norm();
    if (n > 1e-12) return d / n;
  }
}

std::vector<Point3> subsample(const std::vector<Point3>& points, double keep,
                              std::mt19937_64& rng) {
  if (keep >= 1.0) return points;
  const auto n_keep = static_cast<std::size_t>(
      std::llround(keep * static_cast<double>(points.size())));
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n_keep);
  std::sort(idx.begin(), idx.end());
  std::vector<Point3> out;
  out.reserve(n_keep);
  for (std::size_t k : idx) out.push_back(points[k]);
  return out;
}

void add_noise(std::vector<Point3>& points, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& p : points) p += Point3(normal(rng), normal(rng), normal(rng));
}

std::vector<Point3> crop(const std::vector<Point3>& points, double fraction,
                         std::mt19937_64& rng) {
  if (fraction <= 0.0) return points;
  const Point3 dir = random_direction(rng);
  const auto n_drop = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(points.size())));
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto depth_less = [&](std::size_t a, std::size_t b) {
    const double da = dir.dot(points[a]);
    const double db = dir.dot(points[b]);
    return da != db ? da < db : a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_drop),
                   idx.end(), depth_less);
  std::vector<bool> dropped(points.size(), false);
  for (std::size_t m = 0; m < n_drop; ++m) dropped[idx[m]] = true;
  std::vector<Point3> out;
  out.reserve(points.size() - n_drop);
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!dropped[k]) out.push_back(points[k]);
  }
  return out;
}

void inject_outliers(std::vector<Point3>& points, double fraction,
                     std::mt19937_64& rng) {
  if (fraction <= 0.0) return;
  const BoundingDiameter box = containing_box(points);
  const Point3 center = 0.5 * (box.min_corner + box.max_corner);
  const Point3 half = 0.6 * (box.max_corner - box.min_corner);
  const auto n_out = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(points.size())));
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t m = 0; m < n_out; ++m) {
    Point3 q;
    for (int d = 0; d < 3; ++d) {
      q[d] = uniform(rng, center[d] - half[d], center[d] + half[d]);
    }
    points[idx[m]] = q;
  }
}

void require_points(const std::vector<Point3>& points, const char* stage) {
  if (points.size() < kMinBenchmarkPoints) {
    throw Error(ErrorCode::kTooFewPoints,
                std::string(stage) + " left " + std::to_string(points.size()) +
                    " points");
  }
}

// Rejection sampling against the area element: accept (u, v) with probability
// |dp/du x dp/dv| / bound.
template <typename Surface, typename Jacobian>
PointCloud sample_parametric(std::size_t n, std::uint64_t seed, double u_max,
                             double v_min, double v_max, double bound,
                             Surface surface, Jacobian area, std::string label) {
  std::mt19937_64 rng(seed);
  std::vector<Point3> points;
  points.reserve(n);
  while (points.size() < n) {
    const double u = uniform(rng, 0.0, u_max);
    const double v = uniform(rng, v_min, v_max);
    if (uniform(rng, 0.0, bound) < area(u, v)) points.push_back(surface(u, v));
  }
  return PointCloud(std::move(points), std::move(label));
}

PointCloud sample_torus(std::size_t n, std::uint64_t seed) {
  auto surface = [](double u, double v) {
    const double r = torus_tube_radius(u);
    const double rho = kTorusMajorRadius + r * std::cos(v);
    return Point3(rho * std::cos(u), rho * std::sin(u),
                  torus_ring_height(u) + r * std::sin(v));
  };
  auto area = [&surface](double u, double v) {
    constexpr double h = 1e-6;
    const Point3 pu = (surface(u + h, v) - surface(u - h, v)) / (2 * h);
    const Point3 pv = (surface(u, v + h) - surface(u, v - h)) / (2 * h);
    return pu.cross(pv).norm();
  };
  return sample_parametric(n, seed, 2 * kPi, 0.0, 2 * kPi, 1.0, surface, area,
                           "torus");
}

PointCloud sample_sphere(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point3> points;
  points.reserve(n);
  while (points.size() < n) points.push_back(random_direction(rng));
  return PointCloud(std::move(points), "sphere");
}

double bump_radius(const Point3& d) {
  return 1.0 + 0.18 * std::sin(3.0 * d.x() + 1.0) * std::cos(2.0 * d.y()) +
         0.12 * std::cos(4.0 * d.z() + 2.0 * d.x()) + 0.08 * d.x() * d.y();
}

PointCloud sample_bumpy_sphere(std::size_t n, std::uint64_t seed) {
  // Radial graph over the unit sphere; rejection on r^2 keeps the density
  // close to uniform by area.
  std::mt19937_64 rng(seed);
  std::vector<Point3> points;
  points.reserve(n);
  const double bound = 1.5 * 1.5;
  while (points.size() < n) {
    const Point3 d = random_direction(rng);
    const double r = bump_radius(d);
    if (uniform(rng, 0.0, bound) < r * r) points.push_back(r * d);
  }
  return PointCloud(std::move(points), "bumpy_sphere");
}

PointCloud sample_l_shell(std::size_t n, std::uint64_t seed) {
  // L polygon in the xy plane, extruded over z in [0, height].
  static const std::array<Eigen::Vector2d, 6> kOutline{
      Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(2.4, 0.0),
      Eigen::Vector2d(2.4, 0.8), Eigen::Vector2d(0.9, 0.8),
      Eigen::Vector2d(0.9, 1.6), Eigen::Vector2d(0.0, 1.6)};
  constexpr double kHeight = 0.5;
  auto inside = [](double x, double y) {
    return (x >= 0.0 && x <= 2.4 && y >= 0.0 && y <= 0.8) ||
           (x >= 0.0 && x <= 0.9 && y >= 0.0 && y <= 1.6);
  };
  const double cap_area = 2.4 * 0.8 + 0.9 * 0.8;
  double perimeter = 0.0;
  for (std::size_t k = 0; k < kOutline.size(); ++k) {
    perimeter += (kOutline[(k + 1) % kOutline.size()] - kOutline[k]).norm();
  }
  const double total = 2.0 * cap_area + perimeter * kHeight;

  std::mt19937_64 rng(seed);
  std::vector<Point3> points;
  points.reserve(n);
  while (points.size() < n) {
    const double pick = uniform(rng, 0.0, total);
    if (pick < 2.0 * cap_area) {
      const double z = pick < cap_area ? 0.0 : kHeight;
      double x = 0.0;
      double y = 0.0;
      do {
        x = uniform(rng, 0.0, 2.4);
        y = uniform(rng, 0.0, 1.6);
      } while (!inside(x, y));
      points.emplace_back(x, y, z);
    } else {
      double s = uniform(rng, 0.0, perimeter);
      std::size_t k = 0;
      for (;; ++k) {
        const double len = (kOutline[(k + 1) % kOutline.size()] - kOutline[k]).norm();
        if (s <= len || k + 1 == kOutline.size()) {
          const Eigen::Vector2d a = kOutline[k];
          const Eigen::Vector2d b = kOutline[(k + 1) % kOutline.size()];
          const Eigen::Vector2d q = a + (b - a) * std::min(s / len, 1.0);
          points.emplace_back(q.x(), q.y(), uniform(rng, 0.0, kHeight));
          break;
        }
        s -= len;
      }
    }
  }
  return PointCloud(std::move(points), "l_shell");
}

}  // namespace

double torus_tube_radius(double u) {
  return 0.25 * (1.0 + 0.5 * std::cos(u) + 0.25 * std::sin(2.0 * u));
}

double torus_ring_height(double u) {
  return 0.35 * std::sin(u) * std::cos(u) + 0.25 * std::cos(3.0 * u);
}

Matrix3 random_rotation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-12);
  q.normalize();
  return q.toRotationMatrix();
}

void CrossSourceSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(density_keep_a > 0.0 && density_keep_a <= 1.0,
          "density_keep_a must lie in (0, 1]");
  require(density_keep_b > 0.0 && density_keep_b <= 1.0,
          "density_keep_b must lie in (0, 1]");
  require(noise_sigma_a >= 0.0 && noise_sigma_b >= 0.0,
          "noise sigmas must be >= 0");
  require(outlier_frac >= 0.0 && outlier_frac < 1.0,
          "outlier_frac must lie in [0, 1)");
  require(crop_frac >= 0.0 && crop_frac < 1.0, "crop_frac must lie in [0, 1)");
  require(transform.scale() >= 0.2 && transform.scale() <= 5.0,
          "planted scale must lie in [0.2, 5]");
}

BenchmarkPair generate_pair(const PointCloud& base, const CrossSourceSpec& spec) {
  spec.validate();
  if (base.size() < 100) {
    throw Error(ErrorCode::kInvalidArgument, "base cloud needs >= 100 points");
  }
  const double diameter = containing_box(base).diameter;

  std::mt19937_64 sub_a(stream_seed(spec.seed, 0));
  std::mt19937_64 sub_b(stream_seed(spec.seed, spec.shared_subsampling ? 0 : 1));
  std::mt19937_64 noise_a(stream_seed(spec.seed, 2));
  std::mt19937_64 noise_b(stream_seed(spec.seed, 3));
  std::mt19937_64 crop_rng(stream_seed(spec.seed, 4));
  std::mt19937_64 outlier_rng(stream_seed(spec.seed, 5));

  std::vector<Point3> a = subsample(base.points(), spec.density_keep_a, sub_a);
  require_points(a, "subsampling A");
  add_noise(a, spec.noise_sigma_a * diameter, noise_a);

  std::vector<Point3> b = subsample(base.points(), spec.density_keep_b, sub_b);
  require_points(b, "subsampling B");
  add_noise(b, spec.noise_sigma_b * diameter, noise_b);
  b = apply_transform(spec.transform, b);
  b = crop(b, spec.crop_frac, crop_rng);
  require_points(b, "cropping B");
  inject_outliers(b, spec.outlier_frac, outlier_rng);

  return {PointCloud(std::move(a), "A"), PointCloud(std::move(b), "B"),
          spec.transform, spec};
}

PointCloud builtin_shape(std::string_view name, std::size_t n,
                         std::uint64_t seed) {
  if (n < 100) {
    throw Error(ErrorCode::kInvalidArgument, "builtin shapes need n >= 100");
  }
  if (name == "torus") return sample_torus(n, seed);
  if (name == "sphere") return sample_sphere(n, seed);
  if (name == "bumpy_sphere") return sample_bumpy_sphere(n, seed);
  if (name == "l_shell") return sample_l_shell(n, seed);
  throw Error(ErrorCode::kUnknownShape, "unknown shape '" + std::string(name) + "'");
}

}  // namespace gctr
