#include <benchmark/benchmark.h>

#include <vector>

#include "trx/compositor.hpp"
#include "trx/fusion.hpp"
#include "trx/labelset.hpp"
#include "trx/metrics.hpp"
#include "trx/rng.hpp"
#include "trx/synth.hpp"

namespace {

std::vector<trx::ScoredCase> random_cases(std::size_t n) {
  trx::Rng rng(1);
  std::vector<trx::ScoredCase> out(n);
  for (auto& c : out) {
    c.label = rng.bernoulli(0.3);
    c.score = rng.uniform01() + (c.label ? 0.3 : 0.0);
  }
  return out;
}

trx::HeatLayer random_layer(std::size_t side) {
  trx::Rng rng(2);
  trx::HeatLayer l(side, side);
  for (auto& p : l.pixels()) {
    p = {static_cast<std::uint8_t>(rng.uniform_below(256)), static_cast<std::uint8_t>(rng.uniform_below(256)),
         static_cast<std::uint8_t>(rng.uniform_below(256)), static_cast<std::uint8_t>(rng.uniform_below(256))};
  }
  return l;
}

void BM_MedianBlur5(benchmark::State& state) {
  const trx::HeatLayer l = random_layer(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(trx::median_blur5(l));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_MedianBlur5)->Arg(256)->Arg(1024);

void BM_Auroc(benchmark::State& state) {
  const auto cases = random_cases(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(trx::auroc(cases));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

void BM_BootstrapAuroc(benchmark::State& state) {
  const auto cases = random_cases(2000);
  const trx::AurocRanker ranker(cases);
  const trx::Statistic stat = [&](std::span<const std::size_t> idx) {
    std::vector<std::uint32_t> w(ranker.size(), 0);
    for (std::size_t i : idx) ++w[i];
    return ranker.weighted(w);
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(trx::bootstrap_ci(stat, cases.size(), {.resamples = 1000, .seed = 3}));
  }
}
BENCHMARK(BM_BootstrapAuroc)->Unit(benchmark::kMillisecond);

void BM_Calibrate(benchmark::State& state) {
  const auto cases = random_cases(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(trx::calibrate_threshold(cases));
}
BENCHMARK(BM_Calibrate)->Arg(10000);

void BM_RleRoundTrip(benchmark::State& state) {
  trx::Rng rng(4);
  const std::size_t side = 1024;
  std::vector<std::uint8_t> bits(side * side);
  bool on = false;
  for (auto& b : bits) {
    if (rng.bernoulli(0.01)) on = !on;
    b = on;
  }
  const trx::BinaryMask m(side, side, std::move(bits));
  for (auto _ : state) benchmark::DoNotOptimize(trx::rle_decode(trx::rle_encode(m), side, side));
}
BENCHMARK(BM_RleRoundTrip)->Unit(benchmark::kMillisecond);

void BM_UnifyStudy(benchmark::State& state) {
  trx::CohortSpec spec;
  spec.nStudies = 1;
  spec.width = spec.height = 256;
  spec.cutpoints = trx::FindingMap<double>(2000, 9000, 0.98, 0.15);
  const auto cohort = trx::synth_cohort(spec);
  const trx::ColorScale scale;
  for (auto _ : state) {
    benchmark::DoNotOptimize(trx::unify_heatmaps(trx::study_layers(cohort.outputs.front(), scale)));
  }
}
BENCHMARK(BM_UnifyStudy)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
