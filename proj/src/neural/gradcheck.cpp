#include "d2c/neural/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "d2c/error.hpp"
#include "d2c/neural/layers.hpp"
#include "d2c/rng.hpp"

namespace d2c::nn {

namespace {

Var reduce(Var out, const Tensor& probe) {
  if (out.rows() == 1 && out.cols() == 1) return out;
  return weighted_sum(out, probe);
}

Tensor make_probe(const Tensor& shape_of, std::uint64_t seed) {
  Tensor w(shape_of.rows(), shape_of.cols());
  Rng rng(seed);
  for (double& v : w.values()) v = rng.normal();
  return w;
}

Tensor eval(const DiffFn& f, std::span<const Tensor> inputs) {
  Tape t(false);
  std::vector<Var> vars;
  for (const Tensor& x : inputs) vars.push_back(t.constant(x));
  return f(t, vars).value();
}

// Central difference of the probe-weighted output. Differencing elementwise
// before the weighted sum avoids cancellation between two large sums.
double central_difference(const Tensor& plus, const Tensor& minus, const Tensor& probe, double eps) {
  double acc = 0.0;
  if (plus.size() == 1) return (plus[0] - minus[0]) / (2.0 * eps);
  for (std::size_t i = 0; i < plus.size(); ++i) acc += probe[i] * (plus[i] - minus[i]);
  return acc / (2.0 * eps);
}

}  // namespace

GradCheckResult grad_check(const DiffFn& f, std::span<const Tensor> inputs, double eps, std::uint64_t probe_seed) {
  Tape t(true);
  std::vector<Var> vars;
  for (const Tensor& x : inputs) vars.push_back(t.input(x));
  Var out = f(t, vars);
  const Tensor probe = make_probe(out.value(), probe_seed);
  t.backward(reduce(out, probe));

  GradCheckResult res;
  std::vector<Tensor> work(inputs.begin(), inputs.end());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const bool reached = t.needs_grad(vars[i].id);
    for (std::size_t k = 0; k < work[i].size(); ++k) {
      const double orig = work[i][k];
      work[i][k] = orig + eps;
      const Tensor fp = eval(f, work);
      work[i][k] = orig - eps;
      const Tensor fm = eval(f, work);
      work[i][k] = orig;
      const double fd = central_difference(fp, fm, probe, eps);
      double g = 0.0;
      if (reached) {
        try {
          g = t.grad(vars[i])[k];
        } catch (const Error&) {
          g = 0.0;  // never touched by backward
        }
      }
      const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-8});
      if (rel > res.max_rel_error) res = {rel, i, k};
    }
  }
  return res;
}

namespace {

Tensor randn(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t(r, c);
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

struct GradCase {
  std::string name;
  // Fills inputs and the function for one seed.
  std::function<void(Rng&, std::vector<Tensor>&, DiffFn&)> setup;
};

DiffFn unary_fn(Var (*op)(Var)) {
  return [op](Tape&, std::span<const Var> v) { return op(v[0]); };
}

DiffFn binary_fn(Var (*op)(Var, Var)) {
  return [op](Tape&, std::span<const Var> v) { return op(v[0], v[1]); };
}

// Random normalized adjacency of a small graph (self-loops included).
Tensor random_norm_adj(Rng& rng, std::size_t n) {
  Tensor a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < 0.4) a(i, j) = a(j, i) = 1.0;
  }
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

// GCA parameter tensors in GcaVars order, gates random so that every path
// carries gradient.
void push_gca_params(Rng& rng, std::size_t d, std::vector<Tensor>& in) {
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < 4; ++i) in.push_back(randn(rng, d, d, s));
  in.push_back(randn(rng, d, 4 * d, s));
  in.push_back(randn(rng, 4 * d, d, 0.5 * s));
  Tensor gamma = randn(rng, 1, d, 0.1);
  for (double& g : gamma.values()) g += 1.0;
  in.push_back(gamma);
  in.push_back(randn(rng, 1, d, 0.1));
  in.push_back(randn(rng, 1, 1, 0.5));
  in.push_back(randn(rng, 1, 1, 0.5));
}

GcaVars gca_vars(std::span<const Var> v, std::size_t at) {
  return {v[at], v[at + 1], v[at + 2], v[at + 3], v[at + 4], v[at + 5], v[at + 6], v[at + 7], v[at + 8], v[at + 9]};
}

std::vector<GradCase> grad_cases() {
  std::vector<GradCase> cases;
  auto simple = [&](std::string name, std::vector<std::pair<std::size_t, std::size_t>> shapes, DiffFn f) {
    cases.push_back({std::move(name), [shapes, f](Rng& rng, std::vector<Tensor>& in, DiffFn& fn) {
                       for (auto [r, c] : shapes) in.push_back(randn(rng, r, c));
                       fn = f;
                     }});
  };
  simple("matmul", {{3, 4}, {4, 5}}, binary_fn(matmul));
  simple("matmul_nt", {{3, 4}, {5, 4}}, binary_fn(matmul_nt));
  simple("add", {{3, 4}, {3, 4}}, binary_fn(add));
  simple("sub", {{3, 4}, {3, 4}}, binary_fn(sub));
  simple("mul", {{3, 4}, {3, 4}}, binary_fn(mul));
  simple("add_row", {{3, 4}, {1, 4}}, binary_fn(add_row));
  simple("scale", {{3, 4}}, [](Tape&, std::span<const Var> v) { return scale(v[0], 0.7); });
  simple("scale_by", {{3, 4}, {1, 1}}, binary_fn(scale_by));
  simple("tanh", {{3, 4}}, unary_fn(tanh));
  simple("relu", {{3, 4}}, unary_fn(relu));
  simple("gelu", {{3, 4}}, unary_fn(gelu));
  simple("softmax", {{3, 5}}, [](Tape&, std::span<const Var> v) { return softmax_rows(v[0]); });
  simple("softmax_causal", {{4, 4}}, [](Tape&, std::span<const Var> v) { return softmax_rows(v[0], true); });
  simple("layer_norm", {{3, 6}, {1, 6}, {1, 6}},
         [](Tape&, std::span<const Var> v) { return layer_norm(v[0], v[1], v[2]); });
  simple("concat_rows", {{2, 3}, {4, 3}}, binary_fn(concat_rows));
  simple("concat_cols", {{3, 2}, {3, 4}}, [](Tape&, std::span<const Var> v) { return concat_cols(v); });
  simple("slice_rows", {{5, 3}}, [](Tape&, std::span<const Var> v) { return slice_rows(v[0], 1, 3); });
  simple("slice_cols", {{3, 5}}, [](Tape&, std::span<const Var> v) { return slice_cols(v[0], 1, 3); });
  simple("gather_rows", {{6, 3}}, [](Tape&, std::span<const Var> v) {
    static const int idx[] = {0, 2, 2, 5};
    return gather_rows(v[0], idx);
  });
  simple("sum", {{3, 4}}, [](Tape&, std::span<const Var> v) { return sum(v[0]); });
  cases.push_back({"cross_entropy", [](Rng& rng, std::vector<Tensor>& in, DiffFn& fn) {
                     in.push_back(randn(rng, 5, 7, 2.0));
                     std::vector<int> tg;
                     for (int i = 0; i < 5; ++i) tg.push_back(static_cast<int>(rng.range(0, 6)));
                     fn = [tg](Tape&, std::span<const Var> v) { return cross_entropy(v[0], tg); };
                   }});
  cases.push_back({"weighted_sum", [](Rng& rng, std::vector<Tensor>& in, DiffFn& fn) {
                     in.push_back(randn(rng, 3, 4));
                     Tensor w = randn(rng, 3, 4);
                     fn = [w](Tape&, std::span<const Var> v) { return weighted_sum(v[0], w); };
                   }});
  simple("attention", {{4, 8}, {4, 8}, {4, 8}},
         [](Tape&, std::span<const Var> v) { return attention(v[0], v[1], v[2]); });
  simple("attention_causal", {{4, 8}, {4, 8}, {4, 8}},
         [](Tape&, std::span<const Var> v) { return attention(v[0], v[1], v[2], true); });
  simple("attention_2head", {{4, 8}, {5, 8}, {5, 8}},
         [](Tape&, std::span<const Var> v) { return attention(v[0], v[1], v[2], false, 2); });
  cases.push_back({"gcn_forward", [](Rng& rng, std::vector<Tensor>& in, DiffFn& fn) {
                     in.push_back(randn(rng, 5, 4));
                     in.push_back(randn(rng, 4, 6, 0.5));
                     in.push_back(randn(rng, 6, 3, 0.5));
                     Tensor adj = random_norm_adj(rng, 5);
                     fn = [adj](Tape& t, std::span<const Var> v) {
                       const Var w[] = {v[1], v[2]};
                       return gcn_forward(v[0], t.constant(adj), w);
                     };
                   }});
  cases.push_back({"resample", [](Rng& rng, std::vector<Tensor>& in, DiffFn& fn) {
                     const std::size_t d = 8, lat = 4;
                     const double s = 1.0 / std::sqrt(8.0);
                     in.push_back(randn(rng, 5, d));
                     in.push_back(randn(rng, lat, d));
                     for (int i = 0; i < 4; ++i) in.push_back(randn(rng, d, d, s));
                     in.push_back(randn(rng, d, 4 * d, s));
                     in.push_back(randn(rng, 4 * d, d, 0.5 * s));
                     fn = [](Tape&, std::span<const Var> v) {
                       return resample(v[0], ResamplerVars{v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
                     };
                   }});
  cases.push_back({"gca", [](Rng& rng, std::vector<Tensor>& in, DiffFn& fn) {
                     in.push_back(randn(rng, 4, 8));
                     in.push_back(randn(rng, 4, 8));
                     push_gca_params(rng, 8, in);
                     fn = [](Tape&, std::span<const Var> v) { return gca(v[0], v[1], gca_vars(v, 2)); };
                   }});
  cases.push_back({"fusion_layer", [](Rng& rng, std::vector<Tensor>& in, DiffFn& fn) {
                     in.push_back(randn(rng, 4, 8));  // X
                     in.push_back(randn(rng, 3, 8));  // Z
                     in.push_back(randn(rng, 4, 8));  // E
                     push_gca_params(rng, 8, in);
                     push_gca_params(rng, 8, in);
                     fn = [](Tape&, std::span<const Var> v) {
                       return fusion_layer(v[0], v[1], v[2], gca_vars(v, 3), gca_vars(v, 13));
                     };
                   }});
  cases.push_back({"decoder_layer", [](Rng& rng, std::vector<Tensor>& in, DiffFn& fn) {
                     const std::size_t d = 8;
                     const double s = 1.0 / std::sqrt(8.0);
                     in.push_back(randn(rng, 4, d));
                     for (int blk = 0; blk < 2; ++blk) {
                       Tensor g = randn(rng, 1, d, 0.1);
                       for (double& x : g.values()) x += 1.0;
                       in.push_back(g);
                       in.push_back(randn(rng, 1, d, 0.1));
                       if (blk == 0)
                         for (int i = 0; i < 4; ++i) in.push_back(randn(rng, d, d, s));
                     }
                     in.push_back(randn(rng, d, 4 * d, s));
                     in.push_back(randn(rng, 4 * d, d, 0.5 * s));
                     fn = [](Tape&, std::span<const Var> v) {
                       return decoder_layer(v[0], DecoderVars{v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]});
                     };
                   }});
  return cases;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(3);
  o << std::scientific << v;
  return o.str();
}

// Fresh GCA block tensors (zero gates), as GcaBlock::init would give.
GcaBlock fresh_block(Rng& rng, std::size_t d) { return GcaBlock::init(d, rng, "check"); }

CheckOutcome check_fusion_identity(const KernelCheckOptions& opt) {
  CheckOutcome o{"fusion_identity_at_init", 0.0, true, ""};
  const std::size_t trials = std::max<std::size_t>(opt.seeds, 1);
  for (std::size_t s = 0; s < trials && o.passed; ++s) {
    Rng rng(derive_seed(opt.base_seed, "fusion-identity", s));
    const std::size_t d = 8;
    const std::size_t m = 1 + rng.range(0, 5), n = 1 + rng.range(0, 5), nz = 1 + rng.range(0, 5);
    Tensor X = randn(rng, n, d), Z = randn(rng, nz, d), E = randn(rng, m, d);
    for (std::size_t depth = 1; depth <= 4; ++depth) {
      std::vector<GcaBlock> vb, gb;
      for (std::size_t i = 0; i < depth; ++i) {
        vb.push_back(fresh_block(rng, d));
        gb.push_back(fresh_block(rng, d));
      }
      Tape t(false);
      Var x = t.constant(X), z = t.constant(Z), e = t.constant(E);
      for (std::size_t i = 0; i < depth; ++i) e = fusion_layer(x, z, e, bind(t, vb[i]), bind(t, gb[i]));
      if (!(e.value() == E)) {
        o.passed = false;
        o.detail = "output differs from E at depth " + std::to_string(depth);
        break;
      }
    }
  }
  return o;
}

CheckOutcome check_resampler_shape(const KernelCheckOptions& opt) {
  CheckOutcome o{"resampler_shape", 0.0, true, ""};
  Rng rng(derive_seed(opt.base_seed, "resampler-shape"));
  const std::size_t d = 8;
  Resampler r = Resampler::init(d, 64, rng, "check");
  for (std::size_t n : {1, 10, 100, 1000}) {
    Tape t(false);
    Var out = resample(t.constant(randn(rng, n, d)), bind(t, std::as_const(r)));
    if (out.rows() != 64 || out.cols() != d) {
      o.passed = false;
      o.detail = "n=" + std::to_string(n) + " gave " + std::to_string(out.rows()) + "x" + std::to_string(out.cols());
    }
  }
  return o;
}

CheckOutcome check_softmax_rows(const KernelCheckOptions& opt) {
  CheckOutcome o{"softmax_row_sums", 0.0, true, ""};
  for (std::size_t s = 0; s < std::max<std::size_t>(opt.seeds, 1); ++s) {
    Rng rng(derive_seed(opt.base_seed, "softmax-rows", s));
    for (bool causal : {false, true}) {
      Tape t(false);
      Var y = softmax_rows(t.constant(randn(rng, 7, 7, 10.0)), causal);
      for (std::size_t r = 0; r < 7; ++r) {
        double acc = 0.0;
        for (double v : y.value().row(r)) acc += v;
        o.max_rel_error = std::max(o.max_rel_error, std::abs(acc - 1.0));
      }
    }
  }
  o.passed = o.max_rel_error <= 1e-12;
  if (!o.passed) o.detail = "row sum off by " + fmt(o.max_rel_error);
  return o;
}

CheckOutcome check_attention_convex(const KernelCheckOptions& opt) {
  CheckOutcome o{"attention_convex_combination", 0.0, true, ""};
  for (std::size_t s = 0; s < std::max<std::size_t>(opt.seeds, 1) && o.passed; ++s) {
    Rng rng(derive_seed(opt.base_seed, "attention-convex", s));
    Tape t(false);
    Tensor V = randn(rng, 6, 5);
    Var y = attention(t.constant(randn(rng, 4, 5, 3.0)), t.constant(randn(rng, 6, 5, 3.0)), t.constant(V));
    for (std::size_t c = 0; c < 5; ++c) {
      double lo = V(0, c), hi = V(0, c);
      for (std::size_t r = 1; r < 6; ++r) {
        lo = std::min(lo, V(r, c));
        hi = std::max(hi, V(r, c));
      }
      for (std::size_t r = 0; r < 4; ++r) {
        const double v = y.value()(r, c);
        if (v < lo - 1e-12 || v > hi + 1e-12) {
          o.passed = false;
          o.detail = "output outside value range in column " + std::to_string(c);
        }
      }
    }
  }
  return o;
}

}  // namespace

std::vector<CheckOutcome> run_kernel_checks(const KernelCheckOptions& opt) {
  std::vector<CheckOutcome> out;
  for (const GradCase& gc : grad_cases()) {
    CheckOutcome o{"grad:" + gc.name, 0.0, true, ""};
    for (std::size_t s = 0; s < opt.seeds; ++s) {
      Rng rng(derive_seed(opt.base_seed, gc.name, s));
      std::vector<Tensor> in;
      DiffFn fn;
      gc.setup(rng, in, fn);
      try {
        GradCheckResult r = grad_check(fn, in, 1e-5, derive_seed(opt.base_seed, "probe:" + gc.name, s));
        if (r.max_rel_error > o.max_rel_error) {
          o.max_rel_error = r.max_rel_error;
          o.detail = "seed " + std::to_string(s) + ", input " + std::to_string(r.input) + "[" +
                     std::to_string(r.index) + "]";
        }
      } catch (const Error& e) {
        o.passed = false;
        o.detail = e.what();
        break;
      }
    }
    if (o.max_rel_error >= opt.tolerance) o.passed = false;
    out.push_back(std::move(o));
  }
  out.push_back(check_fusion_identity(opt));
  out.push_back(check_resampler_shape(opt));
  out.push_back(check_softmax_rows(opt));
  out.push_back(check_attention_convex(opt));
  return out;
}

}  // namespace d2c::nn
