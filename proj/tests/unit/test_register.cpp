#include <gtest/gtest.h>

#include <cmath>

#include "gctr/benchgen.h"
#include "gctr/error.h"
#include "gctr/preprocess.h"
#include "gctr/register.h"
#include "oracles.h"

namespace gctr {
namespace {

// One overlap ratio, one start and no refinement: enough for properties that
// do not depend on accuracy, at a fraction of the default cost.
GctrConfig quick_config() {
  GctrConfig cfg;
  cfg.overlap_ratios = {0.5};
  cfg.restarts = 1;
  cfg.refine_levels = 0;
  cfg.triplet_count = 2000;
  cfg.outer_max_iters = 10;
  return cfg;
}

TEST(GctrConfig, Validation) {
  EXPECT_NO_THROW(GctrConfig{}.validate());
  auto bad = [](auto mutate) {
    GctrConfig cfg;
    mutate(cfg);
    EXPECT_THROW(cfg.validate(), Error);
  };
  bad([](GctrConfig& c) { c.overlap_ratios = {0.3}; });
  bad([](GctrConfig& c) { c.overlap_ratios.clear(); });
  bad([](GctrConfig& c) { c.top_r = 3; });
  bad([](GctrConfig& c) { c.sigma_t = 0.0; });
  bad([](GctrConfig& c) { c.power_tol = 0.0; });
  bad([](GctrConfig& c) { c.outer_tol = -1.0; });
  bad([](GctrConfig& c) { c.outer_max_iters = 0; });
  bad([](GctrConfig& c) { c.power_max_iters = 0; });
  bad([](GctrConfig& c) { c.knn = 0; });
  bad([](GctrConfig& c) { c.restarts = 0; });
  bad([](GctrConfig& c) { c.refine_levels = 5; });
}

TEST(GctrRegister, SelfRegistrationIsIdentity) {
  const auto c = builtin_shape("torus", 2000, 1);
  const auto r = gctr_register(c, c);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.transform.scale(), 1.0, 1e-6);
  EXPECT_LE((r.transform.rotation() - Matrix3::Identity()).norm(), 1e-6);
  EXPECT_LE(r.transform.translation().norm(), 1e-6);
  EXPECT_EQ(r.energy_trace.size(), static_cast<std::size_t>(r.iterations));
}

TEST(GctrRegister, RecoversPlantedSimilarity) {
  const auto c1 = builtin_shape("torus", 2000, 2);
  gctr::testing::Rng rng(2);
  const SimilarityTransform planted(1.5, gctr::testing::random_rotation(rng),
                                    Point3(0.4, -0.3, 0.8));
  const auto c2 = apply_transform(planted, c1);
  const auto r = gctr_register(c1, c2);
  const auto want = planted.inverse();
  EXPECT_NEAR(r.transform.scale(), want.scale(), 1e-3 * want.scale());
  EXPECT_LE((r.transform.rotation() - want.rotation()).norm(), 1e-3);
  const double d = containing_box(c1).diameter;
  EXPECT_LE((r.transform.translation() - want.translation()).norm(), 1e-3 * d);
  // Every returned correspondence is consistent with the recovered motion.
  for (const auto& m : r.correspondences) {
    EXPECT_LT((r.transform.apply(r.salient2[m.i_prime]) - r.salient1[m.i]).norm(),
              0.05 * d);
  }
}

TEST(GctrRegister, DeterministicForSeed) {
  const auto c1 = builtin_shape("bumpy_sphere", 1500, 3);
  gctr::testing::Rng rng(3);
  const auto c2 = apply_transform(gctr::testing::random_similarity(rng), c1);
  auto cfg = quick_config();
  cfg.seed = 17;
  const auto a = gctr_register(c1, c2, cfg);
  const auto b = gctr_register(c1, c2, cfg);
  EXPECT_EQ(a.transform.scale(), b.transform.scale());
  EXPECT_EQ(a.transform.rotation(), b.transform.rotation());
  EXPECT_EQ(a.transform.translation(), b.transform.translation());
  EXPECT_EQ(a.energy_trace, b.energy_trace);
  ASSERT_EQ(a.correspondences.size(), b.correspondences.size());
  for (std::size_t k = 0; k < a.correspondences.size(); ++k) {
    EXPECT_EQ(a.correspondences[k].i, b.correspondences[k].i);
    EXPECT_EQ(a.correspondences[k].i_prime, b.correspondences[k].i_prime);
    EXPECT_EQ(a.correspondences[k].score, b.correspondences[k].score);
  }
}

TEST(GctrRegister, EnergyTraceEndsAboveStartWhenConverged) {
  const auto base = builtin_shape("torus", 2000, 4);
  int converged = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CrossSourceSpec spec;
    spec.density_keep_b = 0.7;
    spec.noise_sigma_b = 0.003;
    spec.seed = seed;
    spec.transform = SimilarityTransform(1.2, random_rotation(seed), Point3(0.1, 0.2, 0.3));
    const auto pair = generate_pair(base, spec);
    auto cfg = quick_config();
    cfg.seed = seed;
    const auto r = gctr_register(pair.cloud_a, pair.cloud_b, cfg);
    EXPECT_EQ(r.energy_trace.size(), static_cast<std::size_t>(r.iterations));
    EXPECT_TRUE(std::isfinite(r.transform.scale()));
    if (!r.converged) continue;
    ++converged;
    EXPECT_GE(r.energy_trace.back(), r.energy_trace.front());
  }
  EXPECT_GE(converged, 1);
}

TEST(GctrRegister, ResultIsValidTransform) {
  const auto c1 = builtin_shape("l_shell", 1200, 5);
  gctr::testing::Rng rng(5);
  const auto c2 = apply_transform(gctr::testing::random_similarity(rng), c1);
  const auto r = gctr_register(c1, c2, quick_config());
  EXPECT_GT(r.transform.scale(), 0.0);
  EXPECT_NEAR(r.transform.rotation().determinant(), 1.0, 1e-9);
  EXPECT_GE(r.correspondences.size(), 3u);
  EXPECT_TRUE(r.overlap_ratio == 0.5);
}

TEST(GctrRegister, DegenerateInputRaises) {
  // Collinear clouds admit no triangle anywhere.
  std::vector<Point3> line;
  for (int k = 0; k < 200; ++k) line.emplace_back(0.01 * k, 0.02 * k, 0.0);
  PointCloud c(line);
  EXPECT_THROW(gctr_register(c, c, quick_config()), Error);
  try {
    gctr_register(c, c, quick_config());
  } catch (const RegistrationError& e) {
    EXPECT_EQ(e.partial().iterations, 0);
  } catch (const Error&) {
  }
}

}  // namespace
}  // namespace gctr
