// Serial reference vs OpenMP kernels. Thread count is the second argument of
// the parallel runs; the serial runs ignore it.

#include <benchmark/benchmark.h>

#include <vector>

#include "d2c/kernels.hpp"
#include "d2c/rng.hpp"

namespace k = d2c::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  d2c::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1, 1);
  return v;
}

template <void (*Fn)(const double*, const double*, double*, const k::Gemm&)>
void bm_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  k::set_num_threads(static_cast<int>(state.range(1)));
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  const k::Gemm g{n, n, n};
  for (auto _ : state) {
    Fn(a.data(), b.data(), c.data(), g);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

template <double (*Fn)(std::span<const double>, std::span<const double>)>
void bm_mse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  k::set_num_threads(static_cast<int>(state.range(1)));
  const auto a = random_vec(n, 3), b = random_vec(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <double (*Fn)(std::span<const double>, std::span<const double>, const k::SsimWindow&)>
void bm_ssim(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  k::set_num_threads(static_cast<int>(state.range(1)));
  const auto a = random_vec(side * side, 5), b = random_vec(side * side, 6);
  const k::SsimWindow w{side, side};
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b, w));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * side * side));
}

void gemm_args(benchmark::internal::Benchmark* b) {
  for (int n : {32, 128, 256})
    for (int t : {1, 2, 4}) b->Args({n, t});
}

void plane_args(benchmark::internal::Benchmark* b) {
  for (int n : {128, 512})
    for (int t : {1, 2, 4}) b->Args({n, t});
}

}  // namespace

BENCHMARK(bm_gemm<k::serial::gemm_nn>)->Name("gemm_nn/serial")->Args({32, 1})->Args({128, 1})->Args({256, 1});
BENCHMARK(bm_gemm<k::parallel::gemm_nn>)->Name("gemm_nn/parallel")->Apply(gemm_args)->UseRealTime();
BENCHMARK(bm_mse<k::serial::sum_sq_diff>)->Name("sum_sq_diff/serial")->Args({1 << 16, 1})->Args({1 << 20, 1});
BENCHMARK(bm_mse<k::parallel::sum_sq_diff>)
    ->Name("sum_sq_diff/parallel")
    ->Args({1 << 16, 1})->Args({1 << 16, 4})->Args({1 << 20, 1})->Args({1 << 20, 4})
    ->UseRealTime();
BENCHMARK(bm_ssim<k::serial::ssim_plane>)->Name("ssim_plane/serial")->Args({128, 1})->Args({512, 1});
BENCHMARK(bm_ssim<k::parallel::ssim_plane>)->Name("ssim_plane/parallel")->Apply(plane_args)->UseRealTime();

BENCHMARK_MAIN();
