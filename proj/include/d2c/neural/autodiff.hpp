#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2c/neural/tensor.hpp"

namespace d2c::nn {

// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad = Tensor(value.rows(), value.cols()); }
};

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode tape. Nodes are appended in execution order and backward()
/// visits them once each in reverse. Gradients accumulate additively.
/// A tape built with record=false keeps values only (inference).
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf whose gradient can be read back with grad().
  Var input(Tensor value);
  // Leaf bound to a parameter; backward() adds into p.grad. The parameter
  // must outlive the tape and not change while it is in use.
  Var param(Parameter& p);
  Var param(const Parameter& p);  // bound without gradient

  /// Seeds d(root)/d(root) = 1; root must be 1 x 1.
  void backward(Var root);

  const Tensor& value(std::size_t id) const;
  const Tensor& grad(std::size_t id) const;
  const Tensor& grad(Var v) const { return grad(v.id); }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // For op implementations.
  Var push(Tensor value, const char* op, std::span<const Var> inputs, Backward backward);
  Var push(Tensor value, const char* op, std::initializer_list<Var> inputs, Backward backward) {
    return push(std::move(value), op, std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }
  // Gradient buffer of a node, allocated (zeroed) on first use.
  Tensor& grad_ref(std::size_t id);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;  // parameter value, not copied
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    Parameter* param = nullptr;
    const char* op = "leaf";
    Backward backward;
  };

  std::deque<Node> nodes_;  // deque keeps references stable while growing
  bool record_;
};

// Test hook: the named op's backward sees its upstream gradient scaled by
// 1.5, which grad_check must detect. Empty string disables.
void set_gradient_fault(std::string op);
const std::string& gradient_fault();

// --- ops -------------------------------------------------------------------
// Each op checks shapes (Error::shape) and that its output is finite
// (Error::numeric naming the op).

Var matmul(Var a, Var b);     // a[m x k] b[k x n]
Var matmul_nt(Var a, Var b);  // a[m x k] b[n x k]^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);       // elementwise
Var add_row(Var a, Var row);  // a[m x n] + row[1 x n] broadcast
Var scale(Var a, double s);
Var scale_by(Var a, Var s);  // s is 1 x 1
Var tanh(Var a);
Var relu(Var a);
Var gelu(Var a);  // tanh approximation
/// Row-wise softmax. causal=true restricts row i to columns 0..i; the
/// masked probabilities are exactly zero.
Var softmax_rows(Var a, bool causal = false);
Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
Var concat_rows(Var a, Var b);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var gather_rows(Var table, std::span<const int> indices);
/// Mean over rows of -log softmax(logits)[target].
Var cross_entropy(Var logits, std::span<const int> targets);
Var sum(Var a);
Var weighted_sum(Var a, const Tensor& weights);

}  // namespace d2c::nn
