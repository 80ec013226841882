#include "d2c/neural/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "d2c/error.hpp"
#include "d2c/kernels.hpp"

namespace d2c::nn {

namespace {

std::string g_fault;

std::string dims(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorKind::shape, std::string(op) + ": incompatible shapes " + dims(a) + " and " + dims(b));
}

void same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a, b);
}

}  // namespace

void set_gradient_fault(std::string op) { g_fault = std::move(op); }
const std::string& gradient_fault() { return g_fault; }

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.op = "constant";
  return {this, nodes_.size() - 1};
}

Var Tape::input(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.needs_grad = record_;
  n.op = "input";
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.external = &p.value;
  n.needs_grad = record_;
  n.param = record_ ? &p : nullptr;
  n.op = "param";
  return {this, nodes_.size() - 1};
}

Var Tape::param(const Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.external = &p.value;
  n.op = "param";
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.value;
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (!n.has_grad) throw Error(ErrorKind::invalid_input, "node has no gradient");
  return n.grad;
}

Tensor& Tape::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    const Tensor& v = value(id);
    n.grad = Tensor(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Var Tape::push(Tensor value, const char* op, std::span<const Var> inputs, Backward backward) {
  if (!value.all_finite())
    throw Error(ErrorKind::numeric, std::string("non-finite value produced by ") + op);
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw Error(ErrorKind::invalid_input, std::string(op) + ": operand from another tape");
    needs = needs || nodes_[v.id].needs_grad;
  }
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.op = op;
  n.needs_grad = record_ && needs;
  if (n.needs_grad) n.backward = std::move(backward);
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var root) {
  if (!record_) throw Error(ErrorKind::invalid_input, "backward on a non-recording tape");
  const Tensor& rv = value(root.id);
  if (rv.rows() != 1 || rv.cols() != 1)
    throw Error(ErrorKind::shape, "backward root must be 1x1, got " + dims(rv));
  grad_ref(root.id)[0] += 1.0;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.needs_grad) continue;
    if (n.backward) {
      if (!g_fault.empty() && g_fault == n.op)
        for (double& g : n.grad.values()) g *= 1.5;
      n.backward(*this, id);
    }
    if (n.param) {
      if (n.param->grad.rows() != n.grad.rows() || n.param->grad.cols() != n.grad.cols())
        n.param->zero_grad();
      n.param->grad.add_inplace(n.grad);
    }
  }
}

// --- ops -------------------------------------------------------------------

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) shape_error("matmul", A, B);
  Tensor C(A.rows(), B.cols());
  kernels::gemm_nn(A.data(), B.data(), C.data(), {A.rows(), A.cols(), B.cols()});
  return a.tape->push(std::move(C), "matmul", {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(a.id);
    const Tensor& B = t.value(b.id);
    if (t.needs_grad(a.id))
      kernels::gemm_nt(g.data(), B.data(), t.grad_ref(a.id).data(), {A.rows(), B.cols(), A.cols(), true});
    if (t.needs_grad(b.id))
      kernels::gemm_tn(A.data(), g.data(), t.grad_ref(b.id).data(), {B.rows(), A.rows(), B.cols(), true});
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.cols()) shape_error("matmul_nt", A, B);
  Tensor C(A.rows(), B.rows());
  kernels::gemm_nt(A.data(), B.data(), C.data(), {A.rows(), A.cols(), B.rows()});
  return a.tape->push(std::move(C), "matmul_nt", {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);  // m x n
    const Tensor& A = t.value(a.id);
    const Tensor& B = t.value(b.id);
    if (t.needs_grad(a.id))  // dA = g B
      kernels::gemm_nn(g.data(), B.data(), t.grad_ref(a.id).data(), {A.rows(), B.rows(), A.cols(), true});
    if (t.needs_grad(b.id))  // dB = g^T A
      kernels::gemm_tn(g.data(), A.data(), t.grad_ref(b.id).data(), {B.rows(), A.rows(), B.cols(), true});
  });
}

namespace {

template <typename F, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, F f, DA da, DB db) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  same_shape(op, A, B);
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = f(A[i], B[i]);
  return a.tape->push(std::move(C), op, {a, b}, [a, b, da, db](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(a.id);
    const Tensor& B = t.value(b.id);
    if (t.needs_grad(a.id)) {
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(A[i], B[i]);
    }
    if (t.needs_grad(b.id)) {
      Tensor& gb = t.grad_ref(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * db(A[i], B[i]);
    }
  });
}

template <typename F, typename D>
Var unary(const char* op, Var a, F f, D d) {
  const Tensor& A = a.value();
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = f(A[i]);
  return a.tape->push(std::move(C), op, {a}, [a, d](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(a.id);
    const Tensor& Y = t.value(self);
    Tensor& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * d(A[i], Y[i]);
  });
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

}  // namespace

Var add(Var a, Var b) {
  return binary("add", a, b, [](double x, double y) { return x + y; },
                [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; },
                [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; },
                [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var add_row(Var a, Var row) {
  const Tensor& A = a.value();
  const Tensor& R = row.value();
  if (R.rows() != 1 || R.cols() != A.cols()) shape_error("add_row", A, R);
  Tensor C = A;
  for (std::size_t r = 0; r < C.rows(); ++r)
    for (std::size_t c = 0; c < C.cols(); ++c) C(r, c) += R[c];
  return a.tape->push(std::move(C), "add_row", {a, row}, [a, row](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(a.id)) t.grad_ref(a.id).add_inplace(g);
    if (t.needs_grad(row.id)) {
      Tensor& gr = t.grad_ref(row.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
    }
  });
}

Var scale(Var a, double s) {
  return unary("scale", a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Var scale_by(Var a, Var s) {
  const Tensor& A = a.value();
  const Tensor& S = s.value();
  if (S.size() != 1) shape_error("scale_by", A, S);
  const double k = S[0];
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = k * A[i];
  return a.tape->push(std::move(C), "scale_by", {a, s}, [a, s](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(a.id);
    const double k = t.value(s.id)[0];
    if (t.needs_grad(a.id)) {
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
    }
    if (t.needs_grad(s.id)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * A[i];
      t.grad_ref(s.id)[0] += acc;
    }
  });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Var a) {
  return unary(
      "gelu", a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); },
      [](double x, double) {
        const double th = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
      });
}

Var softmax_rows(Var a, bool causal) {
  const Tensor& A = a.value();
  if (causal && A.cols() < A.rows())
    throw Error(ErrorKind::shape, "softmax_rows: causal mask needs cols >= rows, got " + dims(A));
  Tensor Y(A.rows(), A.cols());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    const std::size_t n = causal ? r + 1 : A.cols();
    if (n == 0) continue;
    double mx = A(r, 0);
    for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, A(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      Y(r, c) = std::exp(A(r, c) - mx);
      z += Y(r, c);
    }
    for (std::size_t c = 0; c < n; ++c) Y(r, c) /= z;
  }
  const char* op = causal ? "softmax_causal" : "softmax";
  return a.tape->push(std::move(Y), op, {a}, [a](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& Y = t.value(self);
    Tensor& ga = t.grad_ref(a.id);
    for (std::size_t r = 0; r < Y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < Y.cols(); ++c) dot += g(r, c) * Y(r, c);
      for (std::size_t c = 0; c < Y.cols(); ++c) ga(r, c) += Y(r, c) * (g(r, c) - dot);
    }
  });
}

Var layer_norm(Var a, Var gamma, Var beta, double eps) {
  const Tensor& A = a.value();
  const Tensor& G = gamma.value();
  const Tensor& B = beta.value();
  if (G.rows() != 1 || G.cols() != A.cols()) shape_error("layer_norm", A, G);
  if (B.rows() != 1 || B.cols() != A.cols()) shape_error("layer_norm", A, B);
  const std::size_t n = A.cols();
  Tensor xhat(A.rows(), n);
  Tensor inv(A.rows(), 1);
  Tensor Y(A.rows(), n);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += A(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (A(r, c) - mean) * (A(r, c) - mean);
    var /= static_cast<double>(n);
    inv[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat(r, c) = (A(r, c) - mean) * inv[r];
      Y(r, c) = xhat(r, c) * G[c] + B[c];
    }
  }
  return a.tape->push(std::move(Y), "layer_norm", {a, gamma, beta},
                      [a, gamma, beta, xhat = std::move(xhat), inv = std::move(inv)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& G = t.value(gamma.id);
    const std::size_t n = g.cols();
    if (t.needs_grad(gamma.id)) {
      Tensor& gg = t.grad_ref(gamma.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c) gg[c] += g(r, c) * xhat(r, c);
    }
    if (t.needs_grad(beta.id)) {
      Tensor& gb = t.grad_ref(beta.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += g(r, c);
    }
    if (t.needs_grad(a.id)) {
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          const double d = g(r, c) * G[c];
          m1 += d;
          m2 += d * xhat(r, c);
        }
        m1 /= static_cast<double>(n);
        m2 /= static_cast<double>(n);
        for (std::size_t c = 0; c < n; ++c)
          ga(r, c) += inv[r] * (g(r, c) * G[c] - m1 - xhat(r, c) * m2);
      }
    }
  });
}

Var concat_rows(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.cols()) shape_error("concat_rows", A, B);
  std::vector<double> d(A.values().begin(), A.values().end());
  d.insert(d.end(), B.values().begin(), B.values().end());
  Tensor C(A.rows() + B.rows(), A.cols(), std::move(d));
  return a.tape->push(std::move(C), "concat_rows", {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const std::size_t split = t.value(a.id).size();
    if (t.needs_grad(a.id)) {
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
    }
    if (t.needs_grad(b.id)) {
      Tensor& gb = t.grad_ref(b.id);
      for (std::size_t i = split; i < g.size(); ++i) gb[i - split] += g[i];
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorKind::shape, "concat_cols: no operands");
  Tape* tape = parts[0].tape;
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Tensor C(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < P.cols(); ++c) C(r, off + c) = P(r, c);
    off += P.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return tape->push(std::move(C), "concat_cols", parts, [ps](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (const Var& p : ps) {
      const std::size_t pc = t.value(p.id).cols();
      if (t.needs_grad(p.id)) {
        Tensor& gp = t.grad_ref(p.id);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < pc; ++c) gp(r, c) += g(r, off + c);
      }
      off += pc;
    }
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  const Tensor& A = a.value();
  if (start + count > A.rows())
    throw Error(ErrorKind::shape, "slice_rows: rows [" + std::to_string(start) + ", " +
                                      std::to_string(start + count) + ") out of " + dims(A));
  std::vector<double> d(A.data() + start * A.cols(), A.data() + (start + count) * A.cols());
  Tensor C(count, A.cols(), std::move(d));
  return a.tape->push(std::move(C), "slice_rows", {a}, [a, start](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_ref(a.id);
    const std::size_t off = start * ga.cols();
    for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const Tensor& A = a.value();
  if (start + count > A.cols())
    throw Error(ErrorKind::shape, "slice_cols: cols [" + std::to_string(start) + ", " +
                                      std::to_string(start + count) + ") out of " + dims(A));
  Tensor C(A.rows(), count);
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) C(r, c) = A(r, start + c);
  return a.tape->push(std::move(C), "slice_cols", {a}, [a, start](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_ref(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, start + c) += g(r, c);
  });
}

Var gather_rows(Var table, std::span<const int> indices) {
  const Tensor& T = table.value();
  Tensor C(indices.size(), T.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int ix = indices[i];
    if (ix < 0 || static_cast<std::size_t>(ix) >= T.rows())
      throw Error(ErrorKind::vocabulary, "gather_rows: index " + std::to_string(ix) +
                                             " outside table of " + std::to_string(T.rows()) + " rows");
    for (std::size_t c = 0; c < T.cols(); ++c) C(i, c) = T(ix, c);
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return table.tape->push(std::move(C), "gather_rows", {table}, [table, idx](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gt = t.grad_ref(table.id);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < g.cols(); ++c) gt(idx[i], c) += g(i, c);
  });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  const Tensor& L = logits.value();
  if (targets.size() != L.rows() || L.rows() == 0)
    throw Error(ErrorKind::shape, "cross_entropy: " + std::to_string(targets.size()) +
                                      " targets for logits " + dims(L));
  Tensor P(L.rows(), L.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < L.rows(); ++r) {
    const int tgt = targets[r];
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= L.cols())
      throw Error(ErrorKind::vocabulary, "cross_entropy: target " + std::to_string(tgt) + " out of range");
    double mx = L(r, 0);
    for (std::size_t c = 1; c < L.cols(); ++c) mx = std::max(mx, L(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < L.cols(); ++c) {
      P(r, c) = std::exp(L(r, c) - mx);
      z += P(r, c);
    }
    for (std::size_t c = 0; c < L.cols(); ++c) P(r, c) /= z;
    loss += std::log(z) + mx - L(r, tgt);
  }
  loss /= static_cast<double>(L.rows());
  std::vector<int> tg(targets.begin(), targets.end());
  return logits.tape->push(Tensor(1, 1, loss), "cross_entropy", {logits},
                           [logits, tg, P = std::move(P)](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0] / static_cast<double>(P.rows());
    Tensor& gl = t.grad_ref(logits.id);
    for (std::size_t r = 0; r < P.rows(); ++r) {
      for (std::size_t c = 0; c < P.cols(); ++c) gl(r, c) += g * P(r, c);
      gl(r, tg[r]) -= g;
    }
  });
}

Var sum(Var a) {
  const Tensor& A = a.value();
  double s = 0.0;
  for (double v : A.values()) s += v;
  return a.tape->push(Tensor(1, 1, s), "sum", {a}, [a](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad_ref(a.id).values()) v += g;
  });
}

Var weighted_sum(Var a, const Tensor& weights) {
  const Tensor& A = a.value();
  same_shape("weighted_sum", A, weights);
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += A[i] * weights[i];
  return a.tape->push(Tensor(1, 1, s), "weighted_sum", {a}, [a, weights](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * weights[i];
  });
}

}  // namespace d2c::nn
