// Serial reference vs OpenMP kernels and dataflow search.

#include <random>

#include <benchmark/benchmark.h>

#include "hyco/dataflow_search.hpp"
#include "hyco/kernels.hpp"
#include "hyco/search_space.hpp"

namespace {

using namespace hyco;

struct Fixture {
  Tensor x;
  std::vector<double> w;
  std::vector<kernels::ShiftWeight> sw;
  kernels::ConvGeometry g;
};

Fixture make_fixture(int channels, int extent, int kernel, int groups) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Fixture f;
  f.g = {channels, channels, kernel, 1, groups};
  f.x = Tensor(4, channels, extent, extent);
  for (auto& v : f.x.data) v = nd(rng);
  const std::size_t count = static_cast<std::size_t>(channels) * f.g.in_per_group() * kernel * kernel;
  f.w.resize(count);
  f.sw.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    f.w[i] = nd(rng);
    f.sw[i] = {static_cast<std::int8_t>(i % 2 ? 1 : -1), static_cast<std::int8_t>(-static_cast<int>(i % 5))};
  }
  return f;
}

template <auto Kernel>
void run_dense(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)), 16, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.x, f.w, f.g));
  state.SetItemsProcessed(state.iterations() * f.x.size() * f.g.in_per_group() * 9);
}

template <auto Kernel>
void run_shift(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)), 16, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.x, f.sw, f.g));
  state.SetItemsProcessed(state.iterations() * f.x.size() * f.g.in_per_group() * 9);
}

void BM_conv_serial(benchmark::State& s) { run_dense<kernels::serial::conv2d>(s); }
void BM_conv_omp(benchmark::State& s) { run_dense<kernels::omp::conv2d>(s); }
void BM_adder_serial(benchmark::State& s) { run_dense<kernels::serial::adder2d>(s); }
void BM_adder_omp(benchmark::State& s) { run_dense<kernels::omp::adder2d>(s); }
void BM_shift_serial(benchmark::State& s) { run_shift<kernels::serial::shift2d>(s); }
void BM_shift_omp(benchmark::State& s) { run_shift<kernels::omp::shift2d>(s); }

BENCHMARK(BM_conv_serial)->Arg(16)->Arg(32);
BENCHMARK(BM_conv_omp)->Arg(16)->Arg(32);
BENCHMARK(BM_shift_serial)->Arg(16)->Arg(32);
BENCHMARK(BM_shift_omp)->Arg(16)->Arg(32);
BENCHMARK(BM_adder_serial)->Arg(16)->Arg(32);
BENCHMARK(BM_adder_omp)->Arg(16)->Arg(32);

void run_dataflow(benchmark::State& state, bool parallel) {
  const auto space = default_space();
  Rng rng(11);
  const auto layers = expand(space, sample_random(space, rng));
  const auto conv = layers_for(ChunkKind::C, layers);
  const auto budget = kv260_budget();
  for (auto _ : state) {
    benchmark::DoNotOptimize(best_dataflow(ChunkKind::C, conv, 256, budget.gb_bytes_max(), budget, parallel));
  }
}

void BM_dataflow_serial(benchmark::State& s) { run_dataflow(s, false); }
void BM_dataflow_omp(benchmark::State& s) { run_dataflow(s, true); }

BENCHMARK(BM_dataflow_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dataflow_omp)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
