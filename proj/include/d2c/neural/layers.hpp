#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "d2c/neural/autodiff.hpp"

namespace d2c {
class Rng;
}

namespace d2c::nn {

// Parameter init: normal(0, scale); scale 0 means 1/sqrt(rows).
Parameter make_param(std::string name, std::size_t rows, std::size_t cols, Rng& rng, double scale = 0.0);
Parameter make_const_param(std::string name, std::size_t rows, std::size_t cols, double value);

/// softmax(q k^T / sqrt(d)) v. q[m x d], k[n x d], v[n x dv]. With n_heads > 1
/// the d (and dv) columns are split evenly and the heads concatenated.
Var attention(Var q, Var k, Var v, bool causal = false, std::size_t n_heads = 1);

/// Stacked graph convolution: H <- norm_adj * H * W per layer, ReLU between
/// layers. The last layer is linear unless final_activation is set.
Var gcn_forward(Var features, Var norm_adj, std::span<const Var> weights, bool final_activation = false);

// Two-layer GELU feed-forward.
Var feed_forward(Var x, Var w1, Var w2);

struct ResamplerVars {
  Var latents, wq, wk, wv, wo, ff1, ff2;
};

struct Resampler {
  Parameter latents, wq, wk, wv, wo, ff1, ff2;

  static Resampler init(std::size_t d_model, std::size_t n_latents, Rng& rng, const std::string& prefix);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

/// Compress n visual tokens [n x d] into the fixed set of latents
/// [n_latents x d]: one cross-attention over (visual ++ latents) and a
/// feed-forward, both residual.
Var resample(Var visual, const ResamplerVars& p, std::size_t n_heads = 1);

struct GcaVars {
  Var wq, wk, wv, wo, ff1, ff2, ln_gamma, ln_beta, gate_attn, gate_ff;
};

struct GcaBlock {
  Parameter wq, wk, wv, wo, ff1, ff2, ln_gamma, ln_beta, gate_attn, gate_ff;

  // Gates start at zero so a fresh block contributes nothing.
  static GcaBlock init(std::size_t d_model, Rng& rng, const std::string& prefix);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

/// Gated cross-attention: target tokens query the context tokens.
/// Returns the gated update tanh(ga)*attn(LN(target), context) +
/// tanh(gf)*ffw(LN(target)) without adding target; with residual=true the
/// target is added back.
Var gca(Var context, Var target, const GcaVars& p, bool residual = false, std::size_t n_heads = 1);

/// GCA(X, E) + GCA(Z, E) + E for visual latents X, graph embeddings Z and
/// token embeddings E.
Var fusion_layer(Var visual, Var graph, Var tokens, const GcaVars& visual_gca, const GcaVars& graph_gca,
                 std::size_t n_heads = 1);

struct DecoderVars {
  Var ln1_gamma, ln1_beta, wq, wk, wv, wo, ln2_gamma, ln2_beta, ff1, ff2;
};

struct DecoderLayer {
  Parameter ln1_gamma, ln1_beta, wq, wk, wv, wo, ln2_gamma, ln2_beta, ff1, ff2;

  static DecoderLayer init(std::size_t d_model, Rng& rng, const std::string& prefix);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

// Pre-norm causal self-attention block followed by a feed-forward block.
Var decoder_layer(Var x, const DecoderVars& p, std::size_t n_heads = 1);

// Bind a block's parameters onto a tape. Non-const blocks record gradients.
ResamplerVars bind(Tape& t, Resampler& r);
ResamplerVars bind(Tape& t, const Resampler& r);
GcaVars bind(Tape& t, GcaBlock& g);
GcaVars bind(Tape& t, const GcaBlock& g);
DecoderVars bind(Tape& t, DecoderLayer& l);
DecoderVars bind(Tape& t, const DecoderLayer& l);

}  // namespace d2c::nn
