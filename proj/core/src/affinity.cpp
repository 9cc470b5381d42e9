#include "gctr/affinity.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <unordered_set>

#include "gctr/error.h"

namespace gctr {
namespace {

constexpr double kCollinearTolerance = 1e-12;
constexpr std::size_t kEnumerationLimit = 250'000;

double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

double cosine_at(const Point3& apex, const Point3& p, const Point3& q) {
  const Point3 u = (p - apex).normalized();
  const Point3 v = (q - apex).normalized();
  return std::clamp(u.dot(v), -1.0, 1.0);
}

struct TripletHash {
  std::size_t operator()(const std::array<std::size_t, 3>& key) const noexcept {
    std::size_t h = key[0];
    h = h * 1'000'003u ^ key[1];
    h = h * 1'000'003u ^ key[2];
    return h;
  }
};

}  // namespace

TripletDescriptor triplet_descriptor(const Point3& p_i, const Point3& p_j,
                                     const Point3& p_k) {
  const double longest =
      std::max({(p_j - p_i).norm(), (p_k - p_j).norm(), (p_i - p_k).norm()});
  if (!(longest > 0.0) ||
      triangle_area(p_i, p_j, p_k) <= kCollinearTolerance * longest * longest) {
    throw Error(ErrorCode::kDegenerateTriangle, "collinear triplet");
  }
  return {{cosine_at(p_i, p_j, p_k), cosine_at(p_j, p_k, p_i),
           cosine_at(p_k, p_i, p_j)}};
}

bool is_supported_overlap_ratio(double ratio) {
  return std::find(kOverlapRatios.begin(), kOverlapRatios.end(), ratio) !=
         kOverlapRatios.end();
}

std::vector<Triplet> select_wide_baseline_triplets(
    std::span<const Point3> points, std::size_t count, double overlap_ratio,
    const BoundingDiameter& diameter, std::uint64_t seed) {
  if (count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "triplet count must be >= 1");
  }
  if (!is_supported_overlap_ratio(overlap_ratio)) {
    throw Error(ErrorCode::kInvalidArgument,
                "overlap ratio must be one of 0.25, 0.5, 0.75, 1.0");
  }
  const std::size_t n = points.size();
  const double min_edge = 0.5 * overlap_ratio * diameter.diameter;
  const double min_area =
      kCollinearTolerance * diameter.diameter * diameter.diameter;
  auto qualifies = [&](std::size_t i, std::size_t j, std::size_t k) {
    return (points[i] - points[j]).norm() > min_edge &&
           (points[j] - points[k]).norm() > min_edge &&
           (points[k] - points[i]).norm() > min_edge &&
           triangle_area(points[i], points[j], points[k]) > min_area;
  };

  std::mt19937_64 rng(seed);
  std::vector<Triplet> out;
  if (n >= 3) {
    const std::size_t combos = n * (n - 1) * (n - 2) / 6;
    if (combos <= kEnumerationLimit) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          for (std::size_t k = j + 1; k < n; ++k) {
            if (qualifies(i, j, k)) out.push_back({{i, j, k}});
          }
        }
      }
      std::shuffle(out.begin(), out.end(), rng);
      if (out.size() > count) out.resize(count);
    } else {
      std::unordered_set<std::array<std::size_t, 3>, TripletHash> seen;
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      const std::size_t budget = 64 * count + 10'000;
      for (std::size_t attempt = 0; attempt < budget && out.size() < count;
           ++attempt) {
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        const std::size_t k = pick(rng);
        if (i == j || j == k || i == k || !qualifies(i, j, k)) continue;
        std::array<std::size_t, 3> key{i, j, k};
        std::sort(key.begin(), key.end());
        if (seen.insert(key).second) out.push_back({{i, j, k}});
      }
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kNoValidTriplet,
                "no triangle has all edges longer than " +
                    std::to_string(min_edge));
  }
  for (auto& t : out) std::shuffle(t.idx.begin(), t.idx.end(), rng);
  return out;
}

UnaryTensor build_unary_tensor(std::span<const Point3> c1,
                               std::span<const Point3> c2, double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  }
  UnaryTensor out;
  out.n1 = c1.size();
  out.n2 = c2.size();
  out.values.resize(out.n1 * out.n2);
  const double sigma2 = sigma * sigma;
  for (std::size_t ip = 0; ip < out.n2; ++ip) {
    for (std::size_t i = 0; i < out.n1; ++i) {
      out.values[i + ip * out.n1] = std::exp(-(c1[i] - c2[ip]).squaredNorm() / sigma2);
    }
  }
  return out;
}

namespace {

std::vector<Point3> pool_descriptors(std::span<const Point3> points,
                                     std::span<const Triplet> triplets,
                                     std::vector<Triplet>& ordered) {
  static constexpr std::array<std::array<int, 3>, 6> kOrderings{{
      {0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}}};
  std::vector<Point3> descriptors;
  ordered.reserve(triplets.size() * kOrderings.size());
  descriptors.reserve(triplets.size() * kOrderings.size());
  for (const auto& t : triplets) {
    TripletDescriptor base;
    try {
      base = triplet_descriptor(points[t.idx[0]], points[t.idx[1]],
                                points[t.idx[2]]);
    } catch (const Error&) {
      continue;
    }
    for (const auto& o : kOrderings) {
      ordered.push_back({{t.idx[o[0]], t.idx[o[1]], t.idx[o[2]]}});
      descriptors.emplace_back(base.cosines[o[0]], base.cosines[o[1]],
                               base.cosines[o[2]]);
    }
  }
  return descriptors;
}

}  // namespace

TripletPool::TripletPool(std::span<const Point3> points,
                         std::span<const Triplet> triplets)
    : tree_(pool_descriptors(points, triplets, ordered_)) {}

std::vector<TripletPool::Match> TripletPool::nearest(
    const TripletDescriptor& query, std::size_t k) const {
  std::vector<Match> out;
  for (const auto& nb : tree_.knn(query.as_point(), k)) {
    out.push_back({ordered_[nb.index], nb.squared_distance});
  }
  return out;
}

SparseThirdOrderTensor build_third_order_tensor(
    std::span<const Point3> s1, std::span<const Triplet> c1_triplets,
    std::span<const Point3> s2, const TripletPool& pool, std::size_t knn,
    double sigma_t) {
  if (knn == 0 || !(sigma_t > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "knn >= 1 and sigma_t > 0 required");
  }
  if (pool.empty()) {
    throw Error(ErrorCode::kEmptyPool, "no valid triplet on the second cloud");
  }
  SparseThirdOrderTensor out;
  out.n1 = s1.size();
  out.n2 = s2.size();
  if (out.dimension() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "assignment space too large");
  }
  const double inv = 1.0 / (sigma_t * sigma_t);
  out.entries.reserve(c1_triplets.size() * knn);
  for (const auto& t : c1_triplets) {
    const TripletDescriptor d1 =
        triplet_descriptor(s1[t.idx[0]], s1[t.idx[1]], s1[t.idx[2]]);
    for (const auto& m : pool.nearest(d1, knn)) {
      const double value = std::exp(-m.squared_distance * inv);
      if (!(value > 0.0)) continue;
      out.entries.push_back(
          {static_cast<std::uint32_t>(flat_index(t.idx[0], m.ordered.idx[0], out.n1, out.n2)),
           static_cast<std::uint32_t>(flat_index(t.idx[1], m.ordered.idx[1], out.n1, out.n2)),
           static_cast<std::uint32_t>(flat_index(t.idx[2], m.ordered.idx[2], out.n1, out.n2)),
           value});
    }
  }
  return out;
}

}  // namespace gctr
