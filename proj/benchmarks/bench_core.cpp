// Microbenchmarks for the hot paths: per-direction profile construction, the
// finite Hilbert transform, pair-kernel evaluation (direct and bucketed),
// forward sampling, the radial filter, and single-point backprojection.
// Expensive shared state (datasets, kernel tables) is built once per process
// outside the timed loops.
#include <benchmark/benchmark.h>

#include <cmath>

#include "mradon/forward.hpp"
#include "mradon/geometry.hpp"
#include "mradon/inversion.hpp"
#include "mradon/rigidity.hpp"
#include "mradon/transforms.hpp"

using namespace mradon;

namespace {

const Superellipse& body() {
  static const Superellipse se(4, 2.0, 1.0);
  return se;
}

const Ellipsoid& ellipse() {
  static const Ellipsoid e(2.0, 1.0, Vec3{0.3, -0.2, 0.0}, 0.7);
  return e;
}

Vec3 dir(double th) { return {std::cos(th), std::sin(th), 0.0}; }

void BM_RadonChiSuperellipse(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(radon_chi(body(), dir(0.8), 0.3));
}
BENCHMARK(BM_RadonChiSuperellipse);

void BM_ChordProfileEllipse(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(chord_profile(ellipse(), dir(0.8), modes));
}
BENCHMARK(BM_ChordProfileEllipse)->Arg(129)->Arg(257);

void BM_ChordProfileSuperellipse(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(chord_profile(body(), dir(0.8), modes));
}
BENCHMARK(BM_ChordProfileSuperellipse)->Arg(129)->Arg(257);

void BM_HilbertTransform(benchmark::State& state) {
  const ChordProfile p = chord_profile(body(), dir(0.8), 257);
  for (auto _ : state)
    benchmark::DoNotOptimize(hilbert_finite(p));
}
BENCHMARK(BM_HilbertTransform);

void BM_ErrorKernelDirect(benchmark::State& state) {
  const Vec3 x0{0.4, 0.2, 0.0}, x1{-0.6, -0.3, 0.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(error_kernel(body(), x0, x1, 257));
}
BENCHMARK(BM_ErrorKernelDirect);

void BM_ErrorKernelTableBuild(benchmark::State& state) {
  const int buckets = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ErrorKernel(body(), 129, buckets));
}
BENCHMARK(BM_ErrorKernelTableBuild)->Arg(90)->Arg(360)->Unit(benchmark::kMillisecond);

void BM_ErrorKernelBucketedEval(benchmark::State& state) {
  static const ErrorKernel kernel(body(), 257, 720);
  const Vec3 x0{0.4, 0.2, 0.0}, x1{-0.6, -0.3, 0.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(kernel(x0, x1));
}
BENCHMARK(BM_ErrorKernelBucketedEval);

void BM_SphericalMean(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Phantom ph{{Bump{Vec3{0.2, 0.1, dim == 3 ? -0.1 : 0.0}, 0.35, 1.0}}};
  const Vec3 x{0.9, 0.3, dim == 3 ? 0.2 : 0.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(spherical_mean(ph, x, 0.8, dim));
}
BENCHMARK(BM_SphericalMean)->Arg(2)->Arg(3);

void BM_RadialFilter(benchmark::State& state) {
  static const MeansData data = means_dataset(
      ellipse(), Phantom{{Bump{Vec3{0.8, 0.0, 0.0}, 0.45, 1.0}}}, 64, 512);
  for (auto _ : state)
    benchmark::DoNotOptimize(radial_filter(data));
  state.SetItemsProcessed(state.iterations() * data.boundary.size());
}
BENCHMARK(BM_RadialFilter)->Unit(benchmark::kMillisecond);

void BM_BackprojectPoint(benchmark::State& state) {
  static const Backprojection ub(radial_filter(means_dataset(
      ellipse(), Phantom{{Bump{Vec3{0.8, 0.0, 0.0}, 0.45, 1.0}}}, 256, 512)));
  const Vec3 x{0.5, -0.1, 0.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(ub(x));
}
BENCHMARK(BM_BackprojectPoint);

void BM_MomentResidual(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(moment_residual(body(), 2, 32, 129));
}
BENCHMARK(BM_MomentResidual)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
