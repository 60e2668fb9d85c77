#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "membrane/dynamics.hpp"
#include "membrane/harmonics.hpp"

using namespace membrane;

namespace {

SpectralField random_coeffs(int lmax) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  SpectralField c(lmax);
  for (auto& v : c.coeffs) v = n(rng);
  return c;
}

void threads_arg(benchmark::State& state) {
  const int t = static_cast<int>(state.range(1));
  omp_set_num_threads(t > 0 ? t : omp_get_num_procs());
}

void BM_SynthesizeSerial(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const auto g = SphGrid::for_band(L);
  const auto c = random_coeffs(L);
  for (auto _ : state) benchmark::DoNotOptimize(serial::synthesize(c, g));
}

void BM_AnalyzeSerial(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const auto g = SphGrid::for_band(L);
  const auto f = synthesize(random_coeffs(L), g);
  for (auto _ : state) benchmark::DoNotOptimize(serial::analyze(f, L));
}

void BM_Synthesize(benchmark::State& state) {
  threads_arg(state);
  const int L = static_cast<int>(state.range(0));
  const auto g = SphGrid::for_band(L);
  const auto c = random_coeffs(L);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize(c, g));
}

void BM_Analyze(benchmark::State& state) {
  threads_arg(state);
  const int L = static_cast<int>(state.range(0));
  const auto g = SphGrid::for_band(L);
  const auto f = synthesize(random_coeffs(L), g);
  for (auto _ : state) benchmark::DoNotOptimize(analyze(f, L));
}

void BM_SynthesizeJet(benchmark::State& state) {
  threads_arg(state);
  const int L = static_cast<int>(state.range(0));
  const auto g = SphGrid::for_band(L);
  const auto c = random_coeffs(L);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_jet(c, g));
}

void BM_Step(benchmark::State& state) {
  threads_arg(state);
  const int L = static_cast<int>(state.range(0));
  InitialData d;
  d.random_lmax = L / 2;
  d.epsilon = 1e-3;
  State s = make_initial_state(SphGrid::for_band(L), d);
  s.w.lmax = L;
  const double dt = default_dt(L);
  for (auto _ : state) benchmark::DoNotOptimize(step(s, dt, 1.0));
}

// Second argument: OpenMP thread count, 0 for all cores.
void parallel_args(benchmark::internal::Benchmark* b) {
  for (int L : {8, 16, 32, 64})
    for (int t : {1, 0}) b->Args({L, t});
}

}  // namespace

BENCHMARK(BM_SynthesizeSerial)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AnalyzeSerial)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Synthesize)->Apply(parallel_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Analyze)->Apply(parallel_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SynthesizeJet)->Apply(parallel_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Step)->Args({16, 1})->Args({16, 0})->Args({32, 1})->Args({32, 0})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
