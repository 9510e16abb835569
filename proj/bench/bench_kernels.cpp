// Serial reference vs OpenMP build of each hot loop. Set OMP_NUM_THREADS to
// compare thread counts.

#include <random>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "pneumodef/kernels.hpp"
#include "pneumodef/synthgen.hpp"
#include "pneumodef/voxel.hpp"

namespace pneumodef {
namespace {

FeatureMatrix random_features(int rows, int cols) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  FeatureMatrix x(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) x(r, c) = n(rng);
  return x;
}

const Mesh& lobe_mesh() {
  static const Mesh m = generate_case(default_params(Lobe::upper, 1), 1).record.inflated;
  return m;
}

template <auto Gram>
void BM_Gram(benchmark::State& state) {
  // N = 38 is the 6-landmark feature width.
  const FeatureMatrix x = random_features(static_cast<int>(state.range(0)), 38);
  for (auto _ : state) benchmark::DoNotOptimize(Gram(x, 1.0, 0.02));
}

template <auto Cross>
void BM_Cross(benchmark::State& state) {
  const FeatureMatrix a = random_features(394, 38);
  const FeatureMatrix b = random_features(static_cast<int>(state.range(0)), 38);
  for (auto _ : state) benchmark::DoNotOptimize(Cross(a, b, 1.0, 0.02));
}

template <auto Hd>
void BM_Hausdorff(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::vector<Vec3> a, b;
  for (int i = 0; i < state.range(0); ++i) {
    a.emplace_back(u(rng), u(rng), u(rng));
    b.emplace_back(u(rng), u(rng), u(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(Hd(a, b));
}

template <auto Occ>
void BM_Occupancy(benchmark::State& state) {
  const Mesh& m = lobe_mesh();
  const double spacing = static_cast<double>(state.range(0)) / 10.0;
  const GridSpec grid = grid_for_box(bounding_box(m.vertices()), spacing);
  for (auto _ : state) benchmark::DoNotOptimize(Occ(m, grid));
  state.counters["voxels"] = static_cast<double>(grid.size());
}

BENCHMARK(BM_Gram<kernels::serial::gaussian_gram>)->Name("gram/serial")->Arg(394)->Arg(1182)->Arg(3152)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gram<kernels::omp::gaussian_gram>)->Name("gram/omp")->Arg(394)->Arg(1182)->Arg(3152)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Cross<kernels::serial::gaussian_cross>)->Name("cross/serial")->Arg(1182)->Arg(3152)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Cross<kernels::omp::gaussian_cross>)->Name("cross/omp")->Arg(1182)->Arg(3152)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hausdorff<kernels::serial::directed_hausdorff>)->Name("hausdorff/serial")->Arg(400)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Hausdorff<kernels::omp::directed_hausdorff>)->Name("hausdorff/omp")->Arg(400)->Arg(4000)->Unit(benchmark::kMicrosecond);
// Spacing in tenths of a mm.
BENCHMARK(BM_Occupancy<kernels::serial::occupancy>)->Name("occupancy/serial")->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Occupancy<kernels::omp::occupancy>)->Name("occupancy/omp")->Arg(20)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace pneumodef

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
