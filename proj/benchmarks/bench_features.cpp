#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "s2t/features.hpp"

namespace {

s2t::features::AudioSignal noise_signal(double seconds) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  s2t::features::AudioSignal s;
  s.samples.resize(static_cast<size_t>(seconds * s.sample_rate));
  for (size_t i = 0; i < s.samples.size(); ++i) {
    s.samples[i] = 0.3 * std::sin(0.05 * static_cast<double>(i)) + u(rng);
  }
  return s;
}

void BM_Filterbank(benchmark::State& state) {
  const auto signal = noise_signal(static_cast<double>(state.range(0)));
  s2t::features::FrontendConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(s2t::features::extract_filterbank(signal, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 100);  // frames
}
BENCHMARK(BM_Filterbank)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Deltas(benchmark::State& state) {
  const auto feats = s2t::features::extract_filterbank(noise_signal(10.0), {});
  for (auto _ : state) benchmark::DoNotOptimize(s2t::features::compute_deltas(feats, 2));
}
BENCHMARK(BM_Deltas)->Unit(benchmark::kMicrosecond);

}  // namespace
