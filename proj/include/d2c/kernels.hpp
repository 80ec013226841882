#pragma once

#include <cstddef>
#include <span>

// Dense numeric kernels. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::parallel. Both visit the
// terms of each output element in the same order, so results are bitwise
// identical for any thread count; tests rely on this.
namespace d2c::kernels {

struct Gemm {
  std::size_t m, k, n;
  bool accumulate = false;  // C += A*B instead of C = A*B
};

struct SsimWindow {
  std::size_t width, height;  // image size in pixels
  std::size_t size = 8;       // square window, stride 1
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
};

namespace serial {
// C[m x n] = A[m x k] * B[k x n]
void gemm_nn(const double* a, const double* b, double* c, const Gemm& g);
// C[m x n] = A[m x k] * B[n x k]^T
void gemm_nt(const double* a, const double* b, double* c, const Gemm& g);
// C[m x n] = A[k x m]^T * B[k x n]
void gemm_tn(const double* a, const double* b, double* c, const Gemm& g);
// Sum of squared differences.
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
// Mean SSIM over all windows of one channel plane.
double ssim_plane(std::span<const double> a, std::span<const double> b, const SsimWindow& w);
}  // namespace serial

namespace parallel {
void gemm_nn(const double* a, const double* b, double* c, const Gemm& g);
void gemm_nt(const double* a, const double* b, double* c, const Gemm& g);
void gemm_tn(const double* a, const double* b, double* c, const Gemm& g);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
double ssim_plane(std::span<const double> a, std::span<const double> b, const SsimWindow& w);
}  // namespace parallel

// SSIM of a single window at (x, y); shared by both implementations.
double ssim_window(std::span<const double> a, std::span<const double> b, const SsimWindow& w,
                   std::size_t x, std::size_t y);

// Thread count used by the parallel kernels (and batch loops). 0 = runtime
// default.
void set_num_threads(int n);
int num_threads();

// Dispatch used by library code: the parallel path when threads > 1,
// otherwise the serial reference.
void gemm_nn(const double* a, const double* b, double* c, const Gemm& g);
void gemm_nt(const double* a, const double* b, double* c, const Gemm& g);
void gemm_tn(const double* a, const double* b, double* c, const Gemm& g);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
double ssim_plane(std::span<const double> a, std::span<const double> b, const SsimWindow& w);

}  // namespace d2c::kernels
