#include <algorithm>
#include <vector>

#include <omp.h>

#include "d2c/kernels.hpp"

namespace d2c::kernels {

namespace {

int g_threads = 0;

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kMinParallelWork = 1 << 15;

}  // namespace

void set_num_threads(int n) { g_threads = std::max(0, n); }

int num_threads() { return thread_count(); }

namespace parallel {

void gemm_nn(const double* a, const double* b, double* c, const Gemm& g) {
  const bool big = g.m * g.k * g.n >= kMinParallelWork;
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (big)
  for (std::size_t i = 0; i < g.m; ++i) {
    double* ci = c + i * g.n;
    if (!g.accumulate) std::fill(ci, ci + g.n, 0.0);
    for (std::size_t p = 0; p < g.k; ++p) {
      const double aip = a[i * g.k + p];
      const double* bp = b + p * g.n;
      for (std::size_t j = 0; j < g.n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, const Gemm& g) {
  std::vector<double> bt(g.k * g.n);
  for (std::size_t j = 0; j < g.n; ++j)
    for (std::size_t p = 0; p < g.k; ++p) bt[p * g.n + j] = b[j * g.k + p];
  parallel::gemm_nn(a, bt.data(), c, g);
}

void gemm_tn(const double* a, const double* b, double* c, const Gemm& g) {
  const bool big = g.m * g.k * g.n >= kMinParallelWork;
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (big)
  for (std::size_t i = 0; i < g.m; ++i) {
    double* ci = c + i * g.n;
    if (!g.accumulate) std::fill(ci, ci + g.n, 0.0);
    for (std::size_t p = 0; p < g.k; ++p) {
      const double api = a[p * g.m + i];
      const double* bp = b + p * g.n;
      for (std::size_t j = 0; j < g.n; ++j) ci[j] += api * bp[j];
    }
  }
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (a.size() + kChunk - 1) / kChunk;
  std::vector<double> parts(chunks, 0.0);
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (chunks > 1)
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    const std::size_t start = ch * kChunk;
    const std::size_t end = std::min(a.size(), start + kChunk);
    double part = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const double d = a[i] - b[i];
      part += d * d;
    }
    parts[ch] = part;
  }
  double total = 0.0;
  for (double p : parts) total += p;
  return total;
}

double ssim_plane(std::span<const double> a, std::span<const double> b, const SsimWindow& w) {
  const std::size_t nx = w.width - w.size + 1;
  const std::size_t ny = w.height - w.size + 1;
  std::vector<double> rows(ny, 0.0);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::size_t y = 0; y < ny; ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < nx; ++x) row += ssim_window(a, b, w, x, y);
    rows[y] = row;
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total / static_cast<double>(nx * ny);
}

}  // namespace parallel

void gemm_nn(const double* a, const double* b, double* c, const Gemm& g) {
  thread_count() > 1 ? parallel::gemm_nn(a, b, c, g) : serial::gemm_nn(a, b, c, g);
}
void gemm_nt(const double* a, const double* b, double* c, const Gemm& g) {
  thread_count() > 1 ? parallel::gemm_nt(a, b, c, g) : serial::gemm_nt(a, b, c, g);
}
void gemm_tn(const double* a, const double* b, double* c, const Gemm& g) {
  thread_count() > 1 ? parallel::gemm_tn(a, b, c, g) : serial::gemm_tn(a, b, c, g);
}
double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return thread_count() > 1 ? parallel::sum_sq_diff(a, b) : serial::sum_sq_diff(a, b);
}
double ssim_plane(std::span<const double> a, std::span<const double> b, const SsimWindow& w) {
  return thread_count() > 1 ? parallel::ssim_plane(a, b, w) : serial::ssim_plane(a, b, w);
}

}  // namespace d2c::kernels
