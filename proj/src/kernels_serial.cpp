#include <algorithm>
#include <vector>

#include "d2c/kernels.hpp"

namespace d2c::kernels {

double ssim_window(std::span<const double> a, std::span<const double> b, const SsimWindow& w,
                   std::size_t x, std::size_t y) {
  const double count = static_cast<double>(w.size * w.size);
  double sa = 0, sb = 0;
  for (std::size_t dy = 0; dy < w.size; ++dy) {
    const std::size_t row = (y + dy) * w.width + x;
    for (std::size_t dx = 0; dx < w.size; ++dx) {
      sa += a[row + dx];
      sb += b[row + dx];
    }
  }
  const double mu_a = sa / count;
  const double mu_b = sb / count;
  double vaa = 0, vbb = 0, vab = 0;
  for (std::size_t dy = 0; dy < w.size; ++dy) {
    const std::size_t row = (y + dy) * w.width + x;
    for (std::size_t dx = 0; dx < w.size; ++dx) {
      const double da = a[row + dx] - mu_a;
      const double db = b[row + dx] - mu_b;
      vaa += da * da;
      vbb += db * db;
      vab += da * db;
    }
  }
  vaa /= count;
  vbb /= count;
  vab /= count;
  return ((2 * mu_a * mu_b + w.c1) * (2 * vab + w.c2)) /
         ((mu_a * mu_a + mu_b * mu_b + w.c1) * (vaa + vbb + w.c2));
}

namespace serial {

void gemm_nn(const double* a, const double* b, double* c, const Gemm& g) {
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
  serial::gemm_nn(a, bt.data(), c, g);
}

void gemm_tn(const double* a, const double* b, double* c, const Gemm& g) {
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
  // Fixed-size chunks summed in order; the parallel version uses the same
  // chunking.
  constexpr std::size_t kChunk = 4096;
  double total = 0.0;
  for (std::size_t start = 0; start < a.size(); start += kChunk) {
    const std::size_t end = std::min(a.size(), start + kChunk);
    double part = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const double d = a[i] - b[i];
      part += d * d;
    }
    total += part;
  }
  return total;
}

double ssim_plane(std::span<const double> a, std::span<const double> b, const SsimWindow& w) {
  const std::size_t nx = w.width - w.size + 1;
  const std::size_t ny = w.height - w.size + 1;
  double total = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < nx; ++x) row += ssim_window(a, b, w, x, y);
    total += row;
  }
  return total / static_cast<double>(nx * ny);
}

}  // namespace serial
}  // namespace d2c::kernels
