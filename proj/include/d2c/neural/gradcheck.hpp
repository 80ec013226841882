#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "d2c/neural/autodiff.hpp"

namespace d2c::nn {

using DiffFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t input = 0;  // where the worst coordinate lives
  std::size_t index = 0;
};

/// Reverse-mode gradients of f against central differences
/// (f(x+eps) - f(x-eps)) / 2eps for every input coordinate. Relative error
/// uses max(|g|, |g_fd|, 1e-8) as denominator. Non-scalar outputs are reduced
/// with fixed pseudo-random weights drawn from probe_seed; a plain sum would
/// hide errors in ops whose outputs sum to a constant (softmax, layer norm).
GradCheckResult grad_check(const DiffFn& f, std::span<const Tensor> inputs, double eps = 1e-5,
                           std::uint64_t probe_seed = 1);

struct CheckOutcome {
  std::string name;
  double max_rel_error = 0.0;  // for invariant checks: max deviation
  bool passed = false;
  std::string detail;
};

struct KernelCheckOptions {
  std::size_t seeds = 20;
  double tolerance = 1e-4;
  std::uint64_t base_seed = 0;
};

/// Gradient checks for every op and composite block, plus identity-at-init,
/// resampler shape and softmax/attention invariants.
std::vector<CheckOutcome> run_kernel_checks(const KernelCheckOptions& options = {});

}  // namespace d2c::nn
