#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2c/components.hpp"
#include "d2c/neural/layers.hpp"
#include "d2c/pagegraph.hpp"
#include "json.hpp"

namespace d2c::nn {

// Byte-level vocabulary plus special tokens.
namespace tok {
inline constexpr int graph = 256;
inline constexpr int image = 257;
inline constexpr int html = 258;
inline constexpr int html_end = 259;
inline constexpr int sos = 260;  // terminates a sequence
inline constexpr int pad = 261;
inline constexpr int vocab_size = 262;
}  // namespace tok

std::string token_name(int id);

/// Bytes of the HTML text; a leading "<html>" and trailing "</html>" become
/// the special tokens.
std::vector<int> encode_html(std::string_view html);
/// Inverse of encode_html for generated tokens: stops at </html> or <sos>,
/// drops the other specials, and wraps the result in <html>...</html>.
std::string decode_html(std::span<const int> tokens);

enum class PromptMode { train, infer };

/// train: <graph> <image> <html> tokens </html> <sos> (wrapping added only
/// if absent). infer: <graph> <image> <html>.
std::vector<int> build_prompt(std::span<const int> html_tokens, PromptMode mode);

struct ModelConfig {
  std::size_t d_model = 32;
  std::size_t n_fusion_layers = 1;
  std::size_t n_decoder_layers = 1;
  std::size_t fusion_every = 1;  // a fusion layer before every k-th decoder layer
  std::size_t n_latents = 64;
  std::size_t gcn_layers = 2;
  std::size_t n_heads = 1;
  std::size_t vocab = tok::vocab_size;
  std::size_t max_seq_len = 256;
  std::size_t feature_dim = kFeatureDim;
  bool gca_residual = false;
  std::uint64_t seed = 0;

  // Throws invalid_input for non-positive sizes or an inconsistent layer plan.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
// Unknown keys are rejected. Missing keys keep their defaults.
ModelConfig config_from_json(const nlohmann::json& j);
// Flat "key=value" lines; '#' starts a comment.
ModelConfig config_from_kv(std::string_view text, ModelConfig base = {});

/// Encoder inputs for one page.
struct PageContext {
  Tensor node_features;  // N x feature_dim (one zero row for empty pages)
  Tensor norm_adj;       // N x N
  Tensor patches;        // 64 x 3 patch-mean colours
};

/// 8x8 grid of mean RGB values, one row per cell in row-major order.
Tensor patch_features(const Raster& screenshot, std::size_t grid = 8);
PageContext make_page_context(const Annotations& annotations, const Raster& screenshot,
                              const GraphOptions& options = {});
PageContext make_page_context(const PageGraph& graph, PageSize page, const Raster& screenshot);

class ToyModel {
 public:
  explicit ToyModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  struct Encoded {
    Var visual;  // n_latents x d
    Var graph;   // N x d
  };

  // Model parameters bound to one tape.
  struct Bound;

  Encoded encode(Tape& t, const Bound& b, const PageContext& ctx) const;
  // Logits for every position, T x vocab.
  Var logits(Tape& t, const Bound& b, const Encoded& enc, std::span<const int> tokens) const;

  Bound bind(Tape& t);
  Bound bind(Tape& t) const;

 private:
  ModelConfig config_;
  Parameter tok_emb_, pos_emb_, patch_proj_, patch_pos_;
  std::vector<Parameter> gcn_;
  Resampler resampler_;
  std::vector<GcaBlock> visual_gca_, graph_gca_;
  std::vector<DecoderLayer> decoder_;
  Parameter final_gamma_, final_beta_, out_proj_;
};

struct ToyModel::Bound {
  Var tok_emb, pos_emb, patch_proj, patch_pos;
  std::vector<Var> gcn;
  ResamplerVars resampler;
  std::vector<GcaVars> visual_gca, graph_gca;
  std::vector<DecoderVars> decoder;
  Var final_gamma, final_beta, out_proj;
};

/// Next-token cross-entropy of a full training sequence (from build_prompt
/// in train mode). Positions before the <html> token are not scored.
Var sequence_loss(Tape& t, const ToyModel& m, const ToyModel::Bound& b, const PageContext& ctx,
                  std::span<const int> sequence);

struct DecodeResult {
  std::vector<int> tokens;  // generated tokens only (prompt excluded)
  bool truncated = false;   // stopped by max_len before <sos>
};

/// Greedy argmax decoding (ties go to the lowest id) until <sos> or until
/// prompt + generated reaches max_len (capped at max_seq_len).
DecodeResult greedy_decode(const ToyModel& m, const PageContext& ctx, std::span<const int> prompt,
                           std::size_t max_len);

struct ToySample {
  PageContext context;
  std::vector<int> target;  // full train-mode prompt
};

ToySample make_toy_sample(const Annotations& annotations, const Raster& screenshot, std::string_view html);

enum class Optimizer { sgd, adam };

struct TrainOptions {
  std::size_t steps = 1000;
  double lr = 1.0;
  Optimizer optimizer = Optimizer::sgd;
  double clip_norm = 1.0;  // global gradient norm clip, 0 = off
};

struct TrainResult {
  ToyModel model;
  // losses[k] is the mean loss before update k; the last entry is the loss
  // after the final update, so steps = 0 gives just the initial loss.
  std::vector<double> losses;
};

/// Full-batch training from the config's seed. Throws Error(numeric) naming
/// the step if the loss stops being finite.
TrainResult train_toy(std::span<const ToySample> samples, const ModelConfig& config, const TrainOptions& options);

/// Graph -> prompt -> encode/fuse/decode -> HTML. Errors are rethrown with
/// the stage that raised them.
std::string run_inference_pipeline(const Annotations& annotations, const Raster& screenshot, const ToyModel& model,
                                   std::size_t max_len = 0);

nlohmann::json checkpoint_json(const ToyModel& m);
ToyModel model_from_checkpoint(const nlohmann::json& j, const std::optional<ModelConfig>& expected = {});
void save_checkpoint(const ToyModel& m, const std::string& path);
ToyModel load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected = {});

}  // namespace d2c::nn
