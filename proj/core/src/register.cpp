#include "gctr/register.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "gctr/affinity.h"
#include "gctr/kdtree.h"
#include "gctr/preprocess.h"

namespace gctr {
namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xC2B2AE3D27D4EB4Full);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

GridFrame salient_frame(const PointCloud& cloud, const GctrConfig& cfg) {
  if (cfg.salient_frame == SalientFrame::kPrincipal) {
    return principal_frame(cloud.span());
  }
  return GridFrame::anchored_at(containing_box(cloud).min_corner);
}

std::vector<Point3> salient_points(const PointCloud& cloud, double cell,
                                   const GridFrame& frame, const GctrConfig& cfg) {
  SalientStructure salient = extract_salient_points_adaptive(cloud, cell, frame);
  if (cfg.min_segment_fraction > 0.0) {
    std::vector<std::size_t> sizes;
    for (const auto& members : salient.source_indices) sizes.push_back(members.size());
    std::nth_element(sizes.begin(), sizes.begin() + sizes.size() / 2, sizes.end());
    const auto min_points = static_cast<std::size_t>(
        std::ceil(cfg.min_segment_fraction * static_cast<double>(sizes[sizes.size() / 2])));
    try {
      salient = prune_sparse_segments(salient, std::max<std::size_t>(min_points, 1));
    } catch (const Error&) {
      // Too few dense segments; keep everything.
    }
  }
  return std::move(salient.points);
}

PointCloud cleaned(const PointCloud& cloud, const GctrConfig& cfg) {
  if (cfg.outlier_k == 0) return cloud;
  PointCloud kept = remove_statistical_outliers(cloud, cfg.outlier_k, cfg.outlier_std_ratio);
  // A filter that removes most of the cloud is misconfigured for this input.
  return kept.size() * 2 >= cloud.size() ? kept : cloud;
}

bool recoverable(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoValidTriplet:
    case ErrorCode::kEmptyPool:
    case ErrorCode::kNoConsensus:
    case ErrorCode::kInsufficientMatches:
    case ErrorCode::kDegenerateConfiguration:
    case ErrorCode::kDegenerateTriangle:
    case ErrorCode::kZeroEdge:
    case ErrorCode::kNumericalCollapse:
    case ErrorCode::kDegenerateCloud:  // regridding after a wild step
      return true;
    default:
      return false;
  }
}

struct RunOutcome {
  GctrResult result;
  std::optional<ErrorCode> failure;
  std::string message;
};

class Registration {
 public:
  Registration(const PointCloud& c1, const PointCloud& c2, const GctrConfig& cfg)
      : cfg_(cfg), c1_(cleaned(c1, cfg)), c2_(cleaned(c2, cfg)), tree1_(c1_.points()) {
    frame1_ = salient_frame(c1_, cfg);
    frame2_ = salient_frame(c2_, cfg);
    diameter1_ = containing_box(c1_.span(), frame1_).diameter;
    diameter2_ = containing_box(c2_.span(), frame2_).diameter;
    cell1_ = cfg.cell_size > 0.0 ? cfg.cell_size : diameter1_ / cfg.cell_divisions;
    const double sigma = cfg.sigma > 0.0 ? cfg.sigma : 0.1 * diameter1_;
    for (int level = 0; level <= cfg.refine_levels; ++level) {
      const double shrink = std::ldexp(1.0, -level);
      levels_.push_back({cell1_ * shrink, sigma * shrink,
                         salient_points(c1_, cell1_ * shrink, frame1_, cfg)});
    }
    inlier_tol_ = cfg.ransac_inlier_tol > 0.0 ? cfg.ransac_inlier_tol
                                              : 0.05 * diameter1_;
  }

  // Coarse level of run `start`, which uses overlap ratio start / restarts.
  RunOutcome run(std::size_t start) const {
    RunOutcome out;
    out.result.overlap_ratio =
        cfg_.overlap_ratios[start / static_cast<std::size_t>(cfg_.restarts)];
    try {
      iterate(out.result, start, 0, initial_moving(start));
    } catch (const Error& err) {
      if (!recoverable(err.code())) throw;
      out.failure = err.code();
      out.message = err.what();
    }
    return out;
  }

  // Continues a coarse result through the finer levels. A failing level keeps
  // the result of the previous one.
  GctrResult refine(GctrResult coarse, std::size_t start) const {
    for (std::size_t level = 1; level < levels_.size(); ++level) {
      GctrResult r = coarse;
      try {
        iterate(r, start, level, {});
      } catch (const Error& err) {
        if (!recoverable(err.code())) throw;
        break;
      }
      coarse = std::move(r);
    }
    return coarse;
  }

 private:
  struct Level {
    double cell;
    double sigma;
    std::vector<Point3> salient1;
  };

  struct Step {
    SimilarityTransform motion = SimilarityTransform::identity();
    CorrespondenceSet inliers;
    double energy = 0.0;
  };

  // One matching pass on fixed salient sets: tensors, power iteration,
  // discretization, RANSAC, then scale and rigid fit.
  Step solve(const std::vector<Point3>& s1, const std::vector<Point3>& current,
             const GctrResult& r, std::size_t start, std::size_t level,
             double unary_weight) const {
    const Level& lv = levels_[level];
    const auto iter = static_cast<std::uint64_t>(r.iterations);
    const std::size_t n1 = s1.size();
    const std::size_t n2 = current.size();
    const double diameter2 = diameter2_ * r.transform.scale();
    const std::size_t count = std::min(cfg_.triplet_count, n1 * n2);
    const std::size_t top_r = cfg_.top_r > 0 ? cfg_.top_r : std::min(n1, n2);

    const auto c1_triplets = select_wide_baseline_triplets(
        s1, count, r.overlap_ratio, {Point3::Zero(), Point3::Zero(), diameter1_},
        mix_seed(cfg_.seed, start, 3 * iter));
    const auto c2_triplets = select_wide_baseline_triplets(
        current, count * cfg_.pool_factor, r.overlap_ratio,
        {Point3::Zero(), Point3::Zero(), diameter2},
        mix_seed(cfg_.seed, start, 3 * iter + 1));
    const TripletPool pool(current, c2_triplets);
    const auto h3 = build_third_order_tensor(s1, c1_triplets, current, pool,
                                             cfg_.knn, cfg_.sigma_t);
    const auto h1 = build_unary_tensor(s1, current, lv.sigma);

    PowerIterationOptions power;
    power.tolerance = cfg_.power_tol;
    power.max_iterations = cfg_.power_max_iters;
    power.unary_weight = unary_weight;
    power.balance_terms = cfg_.balance_terms;
    const auto solved = power_iteration(h3, h1, AssignmentVector::uniform(n1 * n2), power);

    Step out;
    out.energy = energy(h3, h1, solved.x.values());
    const auto candidates = discretize(solved.x.values(), n1, n2, top_r);
    RansacOptions ransac;
    ransac.iterations = cfg_.ransac_iters;
    ransac.inlier_tolerance = inlier_tolerance(level);
    ransac.seed = mix_seed(cfg_.seed, start, 3 * iter + 2);
    out.inliers = ransac_filter(candidates, s1, current, ransac);

    std::vector<Point3> a;
    std::vector<Point3> b;
    gather_pairs(out.inliers, s1, current, a, b);
    out.motion = estimate_transform(a, b, estimate_scale(a, b));
    return out;
  }

  void record(GctrResult& r, const std::vector<Point3>& s1,
              const std::vector<Point3>& current, Step step) const {
    r.salient1 = s1;
    r.salient2 = apply_transform(r.transform.inverse(), std::span<const Point3>(current));
    r.transform = compose(step.motion, r.transform);
    r.correspondences = std::move(step.inliers);
    r.energy_trace.push_back(step.energy);
    r.iterations += 1;
  }

  // Outer loop at one grid level. At level 0 the first iteration uses
  // `initial` for C2; every other iteration bins the warped C2 on C1's grid.
  void iterate(GctrResult& r, std::size_t start, std::size_t level,
               std::vector<Point3> initial) const {
    const Level& lv = levels_[level];
    const std::size_t level_begin = r.energy_trace.size();
    r.converged = false;
    std::vector<Point3> current = std::move(initial);
    for (int it = 0; it < cfg_.outer_max_iters; ++it) {
      const bool first = level == 0 && it == 0;
      if (!first && (cfg_.regrid_moving || it == 0)) {
        current = salient_points(apply_transform(r.transform, c2_), lv.cell, frame1_, cfg_);
      }
      Step step = solve(lv.salient1, current, r, start, level,
                        first ? cfg_.initial_unary_weight : cfg_.unary_weight);
      const SimilarityTransform motion = step.motion;
      current = apply_transform(motion, std::span<const Point3>(current));
      record(r, lv.salient1, current, std::move(step));
      if (converged(std::span<const double>(r.energy_trace).subspan(level_begin), motion)) {
        r.converged = true;
        break;
      }
    }
  }

 public:
  // Final pass with each cloud binned on its own principal grid at the finest
  // cell. Binning in a cloud's own frame commutes with similarity transforms,
  // so centroids of exact copies correspond exactly, which re-gridding on
  // C1's grid cannot achieve. Kept only if it lowers the alignment residual.
  GctrResult polish(GctrResult r, std::size_t start) const {
    if (cfg_.salient_frame != SalientFrame::kPrincipal || cfg_.polish_passes == 0) {
      return r;
    }
    const std::size_t level = levels_.size() - 1;
    const Level& lv = levels_[level];
    double best = residual(r.transform);
    for (int pass = 0; pass < cfg_.polish_passes; ++pass) {
      try {
        const auto own = salient_points(c2_, lv.cell * diameter2_ / diameter1_, frame2_, cfg_);
        const auto current = apply_transform(r.transform, std::span<const Point3>(own));
        Step step = solve(lv.salient1, current, r, start, level, cfg_.unary_weight);
        GctrResult candidate = r;
        record(candidate, lv.salient1,
               apply_transform(step.motion, std::span<const Point3>(current)), std::move(step));
        const double score = residual(candidate.transform);
        if (!(score < best)) break;
        best = score;
        r = std::move(candidate);
      } catch (const Error& err) {
        if (!recoverable(err.code())) throw;
        break;
      }
    }
    return r;
  }

 private:
  double inlier_tolerance(std::size_t level) const {
    return inlier_tol_ * std::ldexp(1.0, -static_cast<int>(level));
  }

  // Root mean squared nearest-neighbor distance from the warped C2 to C1,
  // each term capped at the coarse inlier tolerance.
  double residual(const SimilarityTransform& t) const {
    double sum = 0.0;
    for (const auto& p : c2_) {
      sum += std::min(tree1_.nearest(t.apply(p)).squared_distance, inlier_tol_ * inlier_tol_);
    }
    return std::sqrt(sum / static_cast<double>(c2_.size()));
  }

  std::vector<Point3> initial_moving(std::size_t start) const {
    const double cell2 = cell1_ * diameter2_ / diameter1_;
    GridFrame frame = frame2_;
    if (start > 0) {
      std::mt19937_64 rng(mix_seed(cfg_.seed, start, ~std::uint64_t{0}));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const Point3 offset(unit(rng), unit(rng), unit(rng));
      frame.origin += frame.axes.transpose() * (cell2 * offset);
    }
    return salient_points(c2_, cell2, frame, cfg_);
  }

  bool converged(std::span<const double> trace,
                 const SimilarityTransform& step) const {
    if (trace.size() >= 2) {
      const double prev = trace[trace.size() - 2];
      const double change = std::abs(trace.back() - prev) /
                            std::max(std::abs(prev), 1e-300);
      if (change < cfg_.outer_tol) return true;
    }
    constexpr double kMaxStepAngle = 0.1 * std::numbers::pi / 180.0;
    return step.rotation_angle() < kMaxStepAngle &&
           std::abs(1.0 - step.scale()) < cfg_.outer_tol &&
           step.translation().norm() < cfg_.outer_tol * diameter1_;
  }

  const GctrConfig& cfg_;
  PointCloud c1_;
  PointCloud c2_;
  GridFrame frame1_;
  GridFrame frame2_;
  double diameter1_ = 0.0;
  double diameter2_ = 0.0;
  double cell1_ = 0.0;
  std::vector<Level> levels_;
  double inlier_tol_ = 0.0;
  KdTree tree1_;
};

}  // namespace

void GctrConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(outlier_std_ratio >= 0.0, "outlier_std_ratio must be >= 0");
  require(cell_size >= 0.0 && std::isfinite(cell_size), "cell_size must be >= 0");
  require(cell_divisions > 0.0, "cell_divisions must be > 0");
  require(min_segment_fraction >= 0.0 && min_segment_fraction <= 1.0,
          "min_segment_fraction must lie in [0, 1]");
  require(triplet_count >= 1, "triplet_count must be >= 1");
  require(pool_factor >= 1, "pool_factor must be >= 1");
  require(knn >= 1, "knn must be >= 1");
  require(sigma >= 0.0, "sigma must be >= 0 (0 selects the default)");
  require(sigma_t > 0.0, "sigma_t must be > 0");
  require(power_tol > 0.0, "power_tol must be > 0");
  require(power_max_iters >= 1, "power_max_iters must be >= 1");
  require(unary_weight >= 0.0, "unary_weight must be >= 0");
  require(initial_unary_weight >= 0.0, "initial_unary_weight must be >= 0");
  require(outer_tol > 0.0, "outer_tol must be > 0");
  require(restarts >= 1, "restarts must be >= 1");
  require(refine_levels >= 0 && refine_levels <= 4, "refine_levels must lie in [0, 4]");
  require(polish_passes >= 0, "polish_passes must be >= 0");
  require(outer_max_iters >= 1, "outer_max_iters must be >= 1");
  require(top_r == 0 || top_r >= 4, "top_r must be >= 4 (or 0 for the default)");
  require(ransac_iters >= 1, "ransac_iters must be >= 1");
  require(ransac_inlier_tol >= 0.0, "ransac_inlier_tol must be >= 0");
  require(!overlap_ratios.empty(), "overlap_ratios must not be empty");
  for (double ratio : overlap_ratios) {
    require(is_supported_overlap_ratio(ratio),
            "overlap_ratios must be drawn from {0.25, 0.5, 0.75, 1.0}");
  }
}

GctrResult gctr_register(const PointCloud& c1, const PointCloud& c2,
                         const GctrConfig& cfg) {
  cfg.validate();
  const Registration registration(c1, c2, cfg);

  std::optional<GctrResult> best;
  std::size_t best_start = 0;
  RunOutcome last_failure;
  const std::size_t starts =
      cfg.overlap_ratios.size() * static_cast<std::size_t>(cfg.restarts);
  for (std::size_t k = 0; k < starts; ++k) {
    RunOutcome outcome = registration.run(k);
    if (outcome.failure) last_failure = outcome;
    if (outcome.result.iterations == 0) continue;
    if (!best || outcome.result.energy_trace.back() > best->energy_trace.back()) {
      best = std::move(outcome.result);
      best_start = k;
    }
  }
  if (!best) {
    throw RegistrationError(last_failure.failure.value_or(ErrorCode::kNoConsensus),
                            last_failure.message, std::move(last_failure.result));
  }
  return registration.polish(registration.refine(std::move(*best), best_start), best_start);
}

}  // namespace gctr
