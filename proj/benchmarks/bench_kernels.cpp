// Per-pair distance cost as a function of sequence length, c = 16.
//
//   scav_bench_kernels --benchmark_filter=SoftDtw

#include <benchmark/benchmark.h>

#include <random>

#include "scav/kernels.hpp"

namespace {

scav::Matrix random_sequence(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  scav::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

template <bool WithGrad>
void run_kernel(benchmark::State& state, const scav::DistanceKind& kind) {
  const int t = static_cast<int>(state.range(0));
  const auto x = random_sequence(t, 16, 1), y = random_sequence(t, 16, 2);
  for (auto _ : state) {
    if constexpr (WithGrad)
      benchmark::DoNotOptimize(scav::distance_grad(x, y, kind));
    else
      benchmark::DoNotOptimize(scav::distance(x, y, kind));
  }
  state.SetComplexityN(t);
}

void BM_Eucl(benchmark::State& s) { run_kernel<false>(s, scav::EuclInterp{}); }
void BM_SoftDtw(benchmark::State& s) { run_kernel<false>(s, scav::SoftDtw{0.1}); }
void BM_HardDtw(benchmark::State& s) { run_kernel<false>(s, scav::HardDtw{}); }
void BM_Wasserstein(benchmark::State& s) { run_kernel<false>(s, scav::Wasserstein{}); }
void BM_EuclGrad(benchmark::State& s) { run_kernel<true>(s, scav::EuclInterp{}); }
void BM_SoftDtwGrad(benchmark::State& s) { run_kernel<true>(s, scav::SoftDtw{0.1}); }

}  // namespace

BENCHMARK(BM_Eucl)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK(BM_SoftDtw)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK(BM_HardDtw)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK(BM_Wasserstein)->RangeMultiplier(2)->Range(16, 128)->Complexity();
BENCHMARK(BM_EuclGrad)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK(BM_SoftDtwGrad)->RangeMultiplier(2)->Range(16, 256)->Complexity();

BENCHMARK_MAIN();
