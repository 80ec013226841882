#include "d2c/neural/layers.hpp"

#include <cmath>
#include <string>

#include "d2c/error.hpp"
#include "d2c/rng.hpp"

namespace d2c::nn {

Parameter make_param(std::string name, std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  Parameter p{std::move(name), Tensor(rows, cols), Tensor(rows, cols)};
  const double s = scale > 0.0 ? scale : 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : p.value.values()) v = s * rng.normal();
  return p;
}

Parameter make_const_param(std::string name, std::size_t rows, std::size_t cols, double value) {
  return Parameter{std::move(name), Tensor(rows, cols, value), Tensor(rows, cols)};
}

Var attention(Var q, Var k, Var v, bool causal, std::size_t n_heads) {
  const std::size_t d = q.cols();
  if (k.cols() != d)
    throw Error(ErrorKind::shape, "attention: query width " + std::to_string(d) + " != key width " +
                                      std::to_string(k.cols()));
  if (k.rows() != v.rows())
    throw Error(ErrorKind::shape, "attention: " + std::to_string(k.rows()) + " keys but " +
                                      std::to_string(v.rows()) + " values");
  if (k.rows() == 0 || q.rows() == 0) throw Error(ErrorKind::invalid_input, "attention: empty sequence");
  if (n_heads == 0 || d % n_heads != 0 || v.cols() % n_heads != 0)
    throw Error(ErrorKind::shape, "attention: width not divisible by " + std::to_string(n_heads) + " heads");
  auto head = [causal](Var qh, Var kh, Var vh) {
    const double s = 1.0 / std::sqrt(static_cast<double>(qh.cols()));
    return matmul(softmax_rows(scale(matmul_nt(qh, kh), s), causal), vh);
  };
  if (n_heads == 1) return head(q, k, v);
  const std::size_t dh = d / n_heads;
  const std::size_t dv = v.cols() / n_heads;
  std::vector<Var> outs;
  for (std::size_t h = 0; h < n_heads; ++h)
    outs.push_back(head(slice_cols(q, h * dh, dh), slice_cols(k, h * dh, dh), slice_cols(v, h * dv, dv)));
  return concat_cols(outs);
}

Var gcn_forward(Var features, Var norm_adj, std::span<const Var> weights, bool final_activation) {
  const std::size_t n = features.rows();
  if (norm_adj.rows() != n || norm_adj.cols() != n)
    throw Error(ErrorKind::shape, "gcn: adjacency must be " + std::to_string(n) + "x" + std::to_string(n));
  Var h = features;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != h.cols())
      throw Error(ErrorKind::shape, "gcn: layer " + std::to_string(l) + " expects width " +
                                        std::to_string(weights[l].rows()) + ", got " + std::to_string(h.cols()));
    h = matmul(norm_adj, matmul(h, weights[l]));
    if (l + 1 < weights.size() || final_activation) h = relu(h);
  }
  return h;
}

Var feed_forward(Var x, Var w1, Var w2) { return matmul(gelu(matmul(x, w1)), w2); }

Resampler Resampler::init(std::size_t d, std::size_t n_latents, Rng& rng, const std::string& p) {
  return Resampler{make_param(p + ".latents", n_latents, d, rng), make_param(p + ".wq", d, d, rng),
                   make_param(p + ".wk", d, d, rng),         make_param(p + ".wv", d, d, rng),
                   make_param(p + ".wo", d, d, rng),         make_param(p + ".ff1", d, 4 * d, rng),
                   make_param(p + ".ff2", 4 * d, d, rng)};
}

std::vector<Parameter*> Resampler::parameters() { return {&latents, &wq, &wk, &wv, &wo, &ff1, &ff2}; }
std::vector<const Parameter*> Resampler::parameters() const {
  return {&latents, &wq, &wk, &wv, &wo, &ff1, &ff2};
}

Var resample(Var visual, const ResamplerVars& p, std::size_t n_heads) {
  if (visual.rows() == 0) throw Error(ErrorKind::invalid_input, "resample: no visual tokens");
  if (visual.cols() != p.latents.cols())
    throw Error(ErrorKind::shape, "resample: visual width " + std::to_string(visual.cols()) +
                                      " != model width " + std::to_string(p.latents.cols()));
  Var kv = concat_rows(visual, p.latents);
  Var att = matmul(attention(matmul(p.latents, p.wq), matmul(kv, p.wk), matmul(kv, p.wv), false, n_heads), p.wo);
  Var lat = add(p.latents, att);
  return add(lat, feed_forward(lat, p.ff1, p.ff2));
}

GcaBlock GcaBlock::init(std::size_t d, Rng& rng, const std::string& p) {
  return GcaBlock{make_param(p + ".wq", d, d, rng),          make_param(p + ".wk", d, d, rng),
                  make_param(p + ".wv", d, d, rng),          make_param(p + ".wo", d, d, rng),
                  make_param(p + ".ff1", d, 4 * d, rng),     make_param(p + ".ff2", 4 * d, d, rng),
                  make_const_param(p + ".ln_gamma", 1, d, 1.0), make_const_param(p + ".ln_beta", 1, d, 0.0),
                  make_const_param(p + ".gate_attn", 1, 1, 0.0), make_const_param(p + ".gate_ff", 1, 1, 0.0)};
}

std::vector<Parameter*> GcaBlock::parameters() {
  return {&wq, &wk, &wv, &wo, &ff1, &ff2, &ln_gamma, &ln_beta, &gate_attn, &gate_ff};
}
std::vector<const Parameter*> GcaBlock::parameters() const {
  return {&wq, &wk, &wv, &wo, &ff1, &ff2, &ln_gamma, &ln_beta, &gate_attn, &gate_ff};
}

Var gca(Var context, Var target, const GcaVars& p, bool residual, std::size_t n_heads) {
  if (context.cols() != target.cols())
    throw Error(ErrorKind::shape, "gca: context width " + std::to_string(context.cols()) +
                                      " != target width " + std::to_string(target.cols()));
  Var x = layer_norm(target, p.ln_gamma, p.ln_beta);
  Var att = matmul(attention(matmul(x, p.wq), matmul(context, p.wk), matmul(context, p.wv), false, n_heads), p.wo);
  Var delta = add(scale_by(att, tanh(p.gate_attn)), scale_by(feed_forward(x, p.ff1, p.ff2), tanh(p.gate_ff)));
  return residual ? add(target, delta) : delta;
}

Var fusion_layer(Var visual, Var graph, Var tokens, const GcaVars& visual_gca, const GcaVars& graph_gca,
                 std::size_t n_heads) {
  return add(add(gca(visual, tokens, visual_gca, false, n_heads), gca(graph, tokens, graph_gca, false, n_heads)),
             tokens);
}

DecoderLayer DecoderLayer::init(std::size_t d, Rng& rng, const std::string& p) {
  return DecoderLayer{make_const_param(p + ".ln1_gamma", 1, d, 1.0), make_const_param(p + ".ln1_beta", 1, d, 0.0),
                      make_param(p + ".wq", d, d, rng),              make_param(p + ".wk", d, d, rng),
                      make_param(p + ".wv", d, d, rng),              make_param(p + ".wo", d, d, rng),
                      make_const_param(p + ".ln2_gamma", 1, d, 1.0), make_const_param(p + ".ln2_beta", 1, d, 0.0),
                      make_param(p + ".ff1", d, 4 * d, rng),         make_param(p + ".ff2", 4 * d, d, rng)};
}

std::vector<Parameter*> DecoderLayer::parameters() {
  return {&ln1_gamma, &ln1_beta, &wq, &wk, &wv, &wo, &ln2_gamma, &ln2_beta, &ff1, &ff2};
}
std::vector<const Parameter*> DecoderLayer::parameters() const {
  return {&ln1_gamma, &ln1_beta, &wq, &wk, &wv, &wo, &ln2_gamma, &ln2_beta, &ff1, &ff2};
}

Var decoder_layer(Var x, const DecoderVars& p, std::size_t n_heads) {
  Var a = layer_norm(x, p.ln1_gamma, p.ln1_beta);
  Var h = add(x, matmul(attention(matmul(a, p.wq), matmul(a, p.wk), matmul(a, p.wv), true, n_heads), p.wo));
  return add(h, feed_forward(layer_norm(h, p.ln2_gamma, p.ln2_beta), p.ff1, p.ff2));
}

namespace {
template <typename P>
Var b(Tape& t, P& p) {
  return t.param(p);
}
}  // namespace

ResamplerVars bind(Tape& t, Resampler& r) {
  return {b(t, r.latents), b(t, r.wq), b(t, r.wk), b(t, r.wv), b(t, r.wo), b(t, r.ff1), b(t, r.ff2)};
}
ResamplerVars bind(Tape& t, const Resampler& r) {
  return {b(t, r.latents), b(t, r.wq), b(t, r.wk), b(t, r.wv), b(t, r.wo), b(t, r.ff1), b(t, r.ff2)};
}
GcaVars bind(Tape& t, GcaBlock& g) {
  return {b(t, g.wq),  b(t, g.wk),       b(t, g.wv),      b(t, g.wo),        b(t, g.ff1),
          b(t, g.ff2), b(t, g.ln_gamma), b(t, g.ln_beta), b(t, g.gate_attn), b(t, g.gate_ff)};
}
GcaVars bind(Tape& t, const GcaBlock& g) {
  return {b(t, g.wq),  b(t, g.wk),       b(t, g.wv),      b(t, g.wo),        b(t, g.ff1),
          b(t, g.ff2), b(t, g.ln_gamma), b(t, g.ln_beta), b(t, g.gate_attn), b(t, g.gate_ff)};
}
DecoderVars bind(Tape& t, DecoderLayer& l) {
  return {b(t, l.ln1_gamma), b(t, l.ln1_beta),  b(t, l.wq),       b(t, l.wk),  b(t, l.wv),
          b(t, l.wo),        b(t, l.ln2_gamma), b(t, l.ln2_beta), b(t, l.ff1), b(t, l.ff2)};
}
DecoderVars bind(Tape& t, const DecoderLayer& l) {
  return {b(t, l.ln1_gamma), b(t, l.ln1_beta),  b(t, l.wq),       b(t, l.wk),  b(t, l.wv),
          b(t, l.wo),        b(t, l.ln2_gamma), b(t, l.ln2_beta), b(t, l.ff1), b(t, l.ff2)};
}

}  // namespace d2c::nn
