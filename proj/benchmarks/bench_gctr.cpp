#include <benchmark/benchmark.h>

#include "gctr/affinity.h"
#include "gctr/benchgen.h"
#include "gctr/kdtree.h"
#include "gctr/preprocess.h"
#include "gctr/solver.h"

namespace gctr {
namespace {

// Salient sets of two torus samples at the default cell, plus the tensors of a
// first outer iteration.
struct Problem {
  std::vector<Point3> s1;
  std::vector<Point3> s2;
  SparseThirdOrderTensor h3;
  UnaryTensor h1;

  explicit Problem(std::size_t triplets) {
    const auto c1 = builtin_shape("torus", 2000, 1);
    const auto c2 = builtin_shape("torus", 2000, 2);
    const double d = containing_box(c1).diameter;
    s1 = extract_salient_points(c1, d / 10, principal_frame(c1.span())).points;
    s2 = extract_salient_points(c2, d / 10, principal_frame(c2.span())).points;
    const auto t1 = select_wide_baseline_triplets(s1, triplets, 0.5, containing_box(s1), 1);
    const auto t2 = select_wide_baseline_triplets(s2, 4 * triplets, 0.5, containing_box(s2), 2);
    const TripletPool pool(s2, t2);
    h3 = build_third_order_tensor(s1, t1, s2, pool, 32, 0.5);
    h1 = build_unary_tensor(s1, s2, 0.1 * d);
  }
};

const Problem& problem() {
  static const Problem p(5000);
  return p;
}

void BM_ContractTensor(benchmark::State& state) {
  const auto& p = problem();
  const auto x = AssignmentVector::uniform(p.h3.dimension());
  for (auto _ : state) {
    benchmark::DoNotOptimize(contract_tensor(p.h3, x.values()));
  }
  state.counters["entries"] = static_cast<double>(p.h3.entries.size());
}

void BM_PowerIteration(benchmark::State& state) {
  const auto& p = problem();
  PowerIterationOptions opts;
  opts.unary_weight = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        power_iteration(p.h3, p.h1, AssignmentVector::uniform(p.h3.dimension()), opts));
  }
}

void BM_BuildThirdOrderTensor(benchmark::State& state) {
  const auto& p = problem();
  const auto count = static_cast<std::size_t>(state.range(0));
  const auto t1 = select_wide_baseline_triplets(p.s1, count, 0.5, containing_box(p.s1), 1);
  const auto t2 = select_wide_baseline_triplets(p.s2, 4 * count, 0.5, containing_box(p.s2), 2);
  for (auto _ : state) {
    const TripletPool pool(p.s2, t2);
    benchmark::DoNotOptimize(build_third_order_tensor(p.s1, t1, p.s2, pool, 32, 0.5));
  }
}

void BM_ExtractSalient(benchmark::State& state) {
  const auto cloud = builtin_shape("torus", static_cast<std::size_t>(state.range(0)), 3);
  const double cell = containing_box(cloud).diameter / 40;
  const auto frame = principal_frame(cloud.span());
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_salient_points(cloud, cell, frame));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_KdTreeNearest(benchmark::State& state) {
  const auto cloud = builtin_shape("bumpy_sphere", static_cast<std::size_t>(state.range(0)), 4);
  const KdTree tree(cloud.points());
  // Queries near the surface, as in ICP and the residual checks. Points deep
  // inside the sphere are nearly equidistant to all of it and defeat pruning.
  const auto queries = builtin_shape("bumpy_sphere", 1024, 5).points();
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.nearest(queries[k++ % queries.size()]));
  }
}

BENCHMARK(BM_ContractTensor)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PowerIteration)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildThirdOrderTensor)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractSalient)->Arg(2000)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KdTreeNearest)->Arg(2000)->Arg(100000);

}  // namespace
}  // namespace gctr

BENCHMARK_MAIN();
