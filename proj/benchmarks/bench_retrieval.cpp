// Retrieval modes over 2000 encoded candidates (T = 60, c = 64), 20 queries
// per iteration. The argument of the hybrid benchmark is the pool size k.

#include <benchmark/benchmark.h>

#include "scav/retrieval.hpp"
#include "scav/seqdata.hpp"
#include "scav/trainer.hpp"

namespace {

const scav::RetrievalTask& task() {
  static const scav::RetrievalTask t = [] {
    scav::SynthConfig cfg;
    cfg.num_pairs = 2000;
    cfg.dim_v = cfg.dim_a = cfg.latent_dim = 64;
    cfg.identity_projections = true;
    cfg.len_v = cfg.len_a = 60;
    cfg.seed = 11;
    const auto data = scav::as_encoded(scav::synthesize(cfg));
    return scav::make_task(data, data, scav::Direction::A2V, 20);
  }();
  return t;
}

void BM_Agg(benchmark::State& state) {
  const auto& t = task();
  for (auto _ : state) benchmark::DoNotOptimize(scav::agg_retrieve(t.queries, t.candidates, 10));
}

void BM_Seq(benchmark::State& state) {
  const auto& t = task();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        scav::seq_retrieve(t.queries, t.candidates, scav::SoftDtw{0.1}, scav::Modality::Audio, 10));
}

void BM_Hybrid(benchmark::State& state) {
  const auto& t = task();
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(scav::hybrid_retrieve(t.queries, t.candidates, k, scav::SoftDtw{0.1},
                                                   scav::Modality::Audio, 10));
}

}  // namespace

BENCHMARK(BM_Agg)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Seq)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hybrid)->Arg(10)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
