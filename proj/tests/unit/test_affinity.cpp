#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "gctr/affinity.h"
#include "gctr/error.h"
#include "oracles.h"

namespace gctr {
namespace {

using testing::Rng;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(TripletDescriptor, Equilateral) {
  const auto d = triplet_descriptor(Point3(0, 0, 0), Point3(1, 0, 0),
                                    Point3(0.5, std::sqrt(3.0) / 2, 0));
  for (double c : d.cosines) EXPECT_NEAR(c, 0.5, 1e-15);
}

TEST(TripletDescriptor, RightTriangle345) {
  // Right angle at the first vertex; the second is opposite the side of
  // length 4, the third opposite the side of length 3.
  const auto d = triplet_descriptor(Point3(0, 0, 0), Point3(3, 0, 0),
                                    Point3(0, 4, 0));
  EXPECT_NEAR(d.cosines[0], 0.0, 1e-15);
  EXPECT_NEAR(d.cosines[1], 0.6, 1e-15);
  EXPECT_NEAR(d.cosines[2], 0.8, 1e-15);
}

TEST(TripletDescriptor, DegenerateInputs) {
  EXPECT_EQ(code_of([] {
              triplet_descriptor(Point3(0, 0, 0), Point3(1, 1, 1), Point3(2, 2, 2));
            }),
            ErrorCode::kDegenerateTriangle);
  EXPECT_EQ(code_of([] {
              triplet_descriptor(Point3(0, 0, 0), Point3(0, 0, 0), Point3(1, 0, 0));
            }),
            ErrorCode::kDegenerateTriangle);
}

TEST(TripletDescriptor, MatchesLawOfCosinesAndSumsToPi) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = testing::random_points(rng, 3);
    const auto d = triplet_descriptor(p[0], p[1], p[2]);
    const auto ref = testing::law_of_cosines(p[0], p[1], p[2]);
    double angles = 0.0;
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(d.cosines[c], ref[c], 1e-9);
      EXPECT_GT(d.cosines[c], -1.0);
      EXPECT_LT(d.cosines[c], 1.0);
      angles += std::acos(d.cosines[c]);
    }
    EXPECT_NEAR(angles, M_PI, 1e-6);
  }
}

TEST(TripletDescriptor, SimilarityInvariant) {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = testing::random_points(rng, 3);
    const auto t = testing::random_similarity(rng, 0.1, 10.0, 5.0);
    const auto a = triplet_descriptor(p[0], p[1], p[2]);
    const auto b = triplet_descriptor(t.apply(p[0]), t.apply(p[1]), t.apply(p[2]));
    EXPECT_LE((a.as_point() - b.as_point()).norm(), 1e-9);
  }
}

TEST(SelectTriplets, TetrahedronAllQualify) {
  const double h = 1.0 / std::sqrt(2.0);
  std::vector<Point3> tet{{1, 0, -h}, {-1, 0, -h}, {0, 1, h}, {0, -1, h}};
  for (auto& p : tet) p *= 0.5;  // unit edges
  BoundingDiameter diam{Point3::Zero(), Point3::Zero(), 1.0};
  const auto t = select_wide_baseline_triplets(tet, 10, 1.0, diam, 7);
  EXPECT_EQ(t.size(), 4u);
  std::set<std::set<std::size_t>> distinct;
  for (const auto& tr : t) distinct.insert({tr.idx[0], tr.idx[1], tr.idx[2]});
  EXPECT_EQ(distinct.size(), 4u);
}

TEST(SelectTriplets, CollinearHasNone) {
  std::vector<Point3> line;
  for (int k = 0; k < 10; ++k) line.emplace_back(k, 2.0 * k, 0);
  BoundingDiameter diam{Point3::Zero(), Point3::Zero(), 1.0};
  EXPECT_EQ(code_of([&] { select_wide_baseline_triplets(line, 10, 0.25, diam, 1); }),
            ErrorCode::kNoValidTriplet);
}

TEST(SelectTriplets, ThresholdHoldsAndDeterministic) {
  Rng rng(33);
  const auto pts = testing::random_points(rng, 100, 0.0, 1.0);
  const auto diam = containing_box(pts);
  for (double ratio : kOverlapRatios) {
    const auto t = select_wide_baseline_triplets(pts, 500, ratio, diam, 99);
    ASSERT_FALSE(t.empty());
    EXPECT_LE(t.size(), 500u);
    const double min_edge = 0.5 * ratio * diam.diameter;
    std::set<std::array<std::size_t, 3>> seen;
    for (const auto& tr : t) {
      const auto& [i, j, k] = tr.idx;
      EXPECT_TRUE(i != j && j != k && i != k);
      EXPECT_GT((pts[i] - pts[j]).norm(), min_edge);
      EXPECT_GT((pts[j] - pts[k]).norm(), min_edge);
      EXPECT_GT((pts[i] - pts[k]).norm(), min_edge);
      EXPECT_TRUE(seen.insert(tr.idx).second);
    }
    EXPECT_EQ(t, select_wide_baseline_triplets(pts, 500, ratio, diam, 99));
  }
}

TEST(SelectTriplets, RejectsUnsupportedRatio) {
  Rng rng(34);
  const auto pts = testing::random_points(rng, 20);
  EXPECT_FALSE(is_supported_overlap_ratio(0.3));
  EXPECT_TRUE(is_supported_overlap_ratio(0.75));
  EXPECT_THROW(select_wide_baseline_triplets(pts, 10, 0.3, containing_box(pts), 0),
               Error);
}

TEST(UnaryTensor, ZeroDistanceAndBandwidth) {
  std::vector<Point3> a{{0, 0, 0}};
  std::vector<Point3> b{{0, 0, 0}, {0.3, 0, 0}};
  const auto u = build_unary_tensor(a, b, 0.3);
  ASSERT_EQ(u.values.size(), 2u);
  EXPECT_EQ(u.values[0], 1.0);
  EXPECT_NEAR(u.values[1], std::exp(-1.0), 1e-15);
}

TEST(UnaryTensor, MatchesDoubleLoop) {
  Rng rng(35);
  for (std::size_t n : {3u, 7u}) {
    const auto a = testing::random_points(rng, n);
    const auto b = testing::random_points(rng, n + 2);
    const double sigma = 0.4;
    const auto u = build_unary_tensor(a, b, sigma);
    EXPECT_EQ(u.n1, a.size());
    EXPECT_EQ(u.n2, b.size());
    ASSERT_EQ(u.values.size(), a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t ip = 0; ip < b.size(); ++ip) {
        const double d2 = (a[i] - b[ip]).squaredNorm();
        EXPECT_EQ(u.values[i + ip * a.size()], std::exp(-d2 / (sigma * sigma)));
        EXPECT_GT(u.values[i + ip * a.size()], 0.0);
        EXPECT_LE(u.values[i + ip * a.size()], 1.0);
      }
    }
  }
}

TEST(TripletPool, MatchesEveryVertexOrdering) {
  Rng rng(36);
  const auto pts = testing::random_points(rng, 5);
  const auto tris = testing::all_triangles(5);
  TripletPool pool(pts, tris);
  EXPECT_EQ(pool.size(), 6 * tris.size());
  // A query listed in any order finds its own ordering at distance zero.
  const Triplet q{{3, 0, 4}};
  const auto m = pool.nearest(triplet_descriptor(pts[3], pts[0], pts[4]), 1);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].ordered, q);
  EXPECT_NEAR(m[0].squared_distance, 0.0, 1e-24);
}

TEST(ThirdOrderTensor, IdenticalSetsMatchThemselves) {
  Rng rng(37);
  const auto pts = testing::random_points(rng, 12);
  const auto trip = select_wide_baseline_triplets(pts, 40, 0.25,
                                                  containing_box(pts), 5);
  TripletPool pool(pts, testing::all_triangles(pts.size()));
  const auto h3 = build_third_order_tensor(pts, trip, pts, pool, 1, 0.3);
  ASSERT_EQ(h3.entries.size(), trip.size());
  for (std::size_t k = 0; k < trip.size(); ++k) {
    const auto& e = h3.entries[k];
    EXPECT_EQ(e.value, 1.0);
    EXPECT_EQ(e.alpha, flat_index(trip[k].idx[0], trip[k].idx[0], 12, 12));
    EXPECT_EQ(e.beta, flat_index(trip[k].idx[1], trip[k].idx[1], 12, 12));
    EXPECT_EQ(e.gamma, flat_index(trip[k].idx[2], trip[k].idx[2], 12, 12));
  }
}

TEST(ThirdOrderTensor, ValueAtSigmaDistance) {
  // Two triangles whose descriptors differ by exactly sigma_t: pick the
  // second cloud's triangle and set sigma_t to the measured distance.
  std::vector<Point3> s1{{0, 0, 0}, {3, 0, 0}, {0, 4, 0}};
  std::vector<Point3> s2{{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2, 0}};
  const auto d1 = triplet_descriptor(s1[0], s1[1], s1[2]);
  const auto d2 = triplet_descriptor(s2[0], s2[1], s2[2]);
  const double sigma_t = (d1.as_point() - d2.as_point()).norm();
  TripletPool pool(s2, std::vector<Triplet>{{{0, 1, 2}}});
  const std::vector<Triplet> t1{{{0, 1, 2}}};
  const auto h3 = build_third_order_tensor(s1, t1, s2, pool, 1, sigma_t);
  ASSERT_EQ(h3.entries.size(), 1u);
  EXPECT_NEAR(h3.entries[0].value, std::exp(-1.0), 1e-12);
}

TEST(ThirdOrderTensor, EmptyPool) {
  std::vector<Point3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  TripletPool pool(line, std::vector<Triplet>{{{0, 1, 2}}});
  EXPECT_TRUE(pool.empty());
  std::vector<Point3> s1{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const std::vector<Triplet> t1{{{0, 1, 2}}};
  EXPECT_EQ(code_of([&] { build_third_order_tensor(s1, t1, line, pool, 4, 0.3); }),
            ErrorCode::kEmptyPool);
}

// Tiny instance, every ordered triple enumerated on both sides and knn covering
// the whole pool: the sparse entries must be exactly the dense six-index tensor.
TEST(ThirdOrderTensor, EqualsDenseSixIndexTensorAtN5) {
  Rng rng(38);
  for (int trial = 0; trial < 5; ++trial) {
    const auto s1 = testing::random_points(rng, 5);
    const auto s2 = testing::random_points(rng, 5);
    const double sigma_t = 0.3;
    const auto t1 = testing::all_ordered_triplets(5);
    TripletPool pool(s2, testing::all_triangles(5));
    const auto h3 = build_third_order_tensor(s1, t1, s2, pool, pool.size(), sigma_t);
    const testing::DenseSixIndexTensor dense(s1, s2, sigma_t);

    ASSERT_EQ(h3.entries.size(), t1.size() * pool.size());
    std::set<std::array<std::uint32_t, 3>> keys;
    for (const auto& e : h3.entries) {
      const auto a = unflatten(e.alpha, 5, 5);
      const auto b = unflatten(e.beta, 5, 5);
      const auto c = unflatten(e.gamma, 5, 5);
      EXPECT_NEAR(e.value, dense.at(a.i, a.i_prime, b.i, b.i_prime, c.i, c.i_prime),
                  1e-12);
      // Distinct points on each side.
      EXPECT_TRUE(a.i != b.i && b.i != c.i && a.i != c.i);
      EXPECT_TRUE(a.i_prime != b.i_prime && b.i_prime != c.i_prime &&
                  a.i_prime != c.i_prime);
      EXPECT_GT(e.value, 0.0);
      EXPECT_LE(e.value, 1.0);
      EXPECT_TRUE(keys.insert({e.alpha, e.beta, e.gamma}).second);
    }
    // Every nonzero dense element is represented.
    EXPECT_EQ(keys.size(), 60u * 60u);
  }
}

TEST(ThirdOrderTensor, RespectsKnnBound) {
  Rng rng(39);
  const auto s1 = testing::random_points(rng, 30);
  const auto s2 = testing::random_points(rng, 30);
  const auto t1 = select_wide_baseline_triplets(s1, 100, 0.25, containing_box(s1), 1);
  const auto t2 = select_wide_baseline_triplets(s2, 400, 0.25, containing_box(s2), 2);
  TripletPool pool(s2, t2);
  const auto h3 = build_third_order_tensor(s1, t1, s2, pool, 8, 0.3);
  EXPECT_LE(h3.entries.size(), t1.size() * 8);
  EXPECT_EQ(h3.dimension(), 900u);
  for (const auto& e : h3.entries) {
    EXPECT_LT(e.alpha, 900u);
    EXPECT_GT(e.value, 0.0);
    EXPECT_LE(e.value, 1.0);
  }
}

}  // namespace
}  // namespace gctr
