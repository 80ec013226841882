#include "d2c/neural/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "d2c/error.hpp"
#include "d2c/rng.hpp"

namespace d2c::nn {

namespace {

constexpr std::string_view kOpen = "<html>";
constexpr std::string_view kClose = "</html>";
constexpr const char* kCheckpointFormat = "d2c-toy-model";
constexpr int kCheckpointVersion = 1;

}  // namespace

std::string token_name(int id) {
  switch (id) {
    case tok::graph: return "<graph>";
    case tok::image: return "<image>";
    case tok::html: return "<html>";
    case tok::html_end: return "</html>";
    case tok::sos: return "<sos>";
    case tok::pad: return "<pad>";
    default: break;
  }
  if (id < 0 || id >= tok::vocab_size) throw Error(ErrorKind::vocabulary, "unknown token id " + std::to_string(id));
  return std::string(1, static_cast<char>(id));
}

std::vector<int> encode_html(std::string_view html) {
  std::vector<int> out;
  const bool open = html.substr(0, kOpen.size()) == kOpen;
  if (open) html.remove_prefix(kOpen.size());
  const bool close = html.size() >= kClose.size() && html.substr(html.size() - kClose.size()) == kClose;
  if (close) html.remove_suffix(kClose.size());
  if (open) out.push_back(tok::html);
  for (char c : html) out.push_back(static_cast<unsigned char>(c));
  if (close) out.push_back(tok::html_end);
  return out;
}

std::string decode_html(std::span<const int> tokens) {
  std::string out(kOpen);
  for (int t : tokens) {
    if (t == tok::html_end || t == tok::sos) break;
    if (t >= 0 && t < 256) out.push_back(static_cast<char>(t));
  }
  out += kClose;
  return out;
}

std::vector<int> build_prompt(std::span<const int> html_tokens, PromptMode mode) {
  for (int t : html_tokens)
    if (t < 0 || t >= tok::vocab_size) throw Error(ErrorKind::vocabulary, "unknown token id " + std::to_string(t));
  std::vector<int> out{tok::graph, tok::image};
  if (mode == PromptMode::infer) {
    out.push_back(tok::html);
    return out;
  }
  if (html_tokens.empty() || html_tokens.front() != tok::html) out.push_back(tok::html);
  out.insert(out.end(), html_tokens.begin(), html_tokens.end());
  if (html_tokens.empty() || html_tokens.back() != tok::html_end) out.push_back(tok::html_end);
  out.push_back(tok::sos);
  return out;
}

// --- config ----------------------------------------------------------------

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(ErrorKind::invalid_input, std::string("config: ") + name + " must be positive");
  };
  positive(d_model, "d_model");
  positive(n_decoder_layers, "n_decoder_layers");
  positive(fusion_every, "fusion_every");
  positive(n_latents, "n_latents");
  positive(gcn_layers, "gcn_layers");
  positive(n_heads, "n_heads");
  positive(max_seq_len, "max_seq_len");
  positive(feature_dim, "feature_dim");
  if (vocab != tok::vocab_size)
    throw Error(ErrorKind::invalid_input, "config: vocab must be " + std::to_string(tok::vocab_size));
  if (d_model % n_heads != 0) throw Error(ErrorKind::invalid_input, "config: d_model not divisible by n_heads");
  const std::size_t expect = (n_decoder_layers + fusion_every - 1) / fusion_every;
  if (n_fusion_layers != expect)
    throw Error(ErrorKind::invalid_input, "config: n_fusion_layers must be " + std::to_string(expect) +
                                              " for " + std::to_string(n_decoder_layers) +
                                              " decoder layers with fusion_every=" + std::to_string(fusion_every));
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"d_model", c.d_model},         {"n_fusion_layers", c.n_fusion_layers},
          {"n_decoder_layers", c.n_decoder_layers}, {"fusion_every", c.fusion_every},
          {"n_latents", c.n_latents},     {"gcn_layers", c.gcn_layers},
          {"n_heads", c.n_heads},         {"vocab", c.vocab},
          {"max_seq_len", c.max_seq_len}, {"feature_dim", c.feature_dim},
          {"gca_residual", c.gca_residual}, {"seed", c.seed}};
}

namespace {

void set_field(ModelConfig& c, const std::string& key, const nlohmann::json& v) {
  auto size = [&](std::size_t& field) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw Error(ErrorKind::invalid_input, "config: " + key + " must be a non-negative integer");
    field = v.get<std::size_t>();
  };
  if (key == "d_model") size(c.d_model);
  else if (key == "n_fusion_layers") size(c.n_fusion_layers);
  else if (key == "n_decoder_layers") size(c.n_decoder_layers);
  else if (key == "fusion_every") size(c.fusion_every);
  else if (key == "n_latents") size(c.n_latents);
  else if (key == "gcn_layers") size(c.gcn_layers);
  else if (key == "n_heads") size(c.n_heads);
  else if (key == "vocab") size(c.vocab);
  else if (key == "max_seq_len") size(c.max_seq_len);
  else if (key == "feature_dim") size(c.feature_dim);
  else if (key == "seed") {
    if (!v.is_number_unsigned()) throw Error(ErrorKind::invalid_input, "config: seed must be unsigned");
    c.seed = v.get<std::uint64_t>();
  } else if (key == "gca_residual") {
    if (!v.is_boolean()) throw Error(ErrorKind::invalid_input, "config: gca_residual must be true/false");
    c.gca_residual = v.get<bool>();
  } else {
    throw Error(ErrorKind::invalid_input, "config: unknown key '" + key + "'");
  }
}

}  // namespace

ModelConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::invalid_input, "config must be a JSON object");
  ModelConfig c;
  for (const auto& [k, v] : j.items()) set_field(c, k, v);
  return c;
}

ModelConfig config_from_kv(std::string_view text, ModelConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::parse, "config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    nlohmann::json v;
    if (val == "true" || val == "false") {
      v = (val == "true");
    } else {
      try {
        std::size_t used = 0;
        const unsigned long long n = std::stoull(val, &used);
        if (used != val.size() || val.front() == '-') throw std::invalid_argument(val);
        v = static_cast<std::uint64_t>(n);
      } catch (const std::exception&) {
        throw Error(ErrorKind::invalid_input, "config line " + std::to_string(lineno) + ": bad value for " + key);
      }
    }
    set_field(base, key, v);
  }
  return base;
}

// --- page context ----------------------------------------------------------

Tensor patch_features(const Raster& img, std::size_t grid) {
  if (img.empty()) throw Error(ErrorKind::invalid_input, "patch_features: empty screenshot");
  const auto W = static_cast<std::size_t>(img.width());
  const auto H = static_cast<std::size_t>(img.height());
  Tensor out(grid * grid, 3);
  for (std::size_t gy = 0; gy < grid; ++gy) {
    const std::size_t y0 = std::min(gy * H / grid, H - 1);
    const std::size_t y1 = std::max((gy + 1) * H / grid, y0 + 1);
    for (std::size_t gx = 0; gx < grid; ++gx) {
      const std::size_t x0 = std::min(gx * W / grid, W - 1);
      const std::size_t x1 = std::max((gx + 1) * W / grid, x0 + 1);
      double s[3] = {0, 0, 0};
      for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x) {
          const Rgb& p = img.at(static_cast<int>(x), static_cast<int>(y));
          for (int c = 0; c < 3; ++c) s[c] += p[c];
        }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      for (int c = 0; c < 3; ++c) out(gy * grid + gx, c) = s[c] / n;
    }
  }
  return out;
}

PageContext make_page_context(const PageGraph& graph, PageSize page, const Raster& screenshot) {
  double pw = page.width, ph = page.height;
  if (pw <= 0 || ph <= 0) {
    pw = screenshot.width();
    ph = screenshot.height();
  }
  if (pw <= 0 || ph <= 0) throw Error(ErrorKind::invalid_input, "page size unknown");
  PageContext ctx;
  ctx.patches = patch_features(screenshot);
  const std::size_t n = graph.size();
  if (n == 0) {
    ctx.node_features = Tensor(1, kFeatureDim);
    ctx.norm_adj = Tensor(1, 1, 1.0);
    return ctx;
  }
  std::vector<double> feats;
  std::size_t dim = 0;
  for (const Component& c : graph.nodes()) {
    auto f = node_features(c, pw, ph);
    if (dim == 0) dim = f.size();
    if (f.size() != dim) throw Error(ErrorKind::shape, "node features have inconsistent widths");
    feats.insert(feats.end(), f.begin(), f.end());
  }
  ctx.node_features = Tensor(n, dim, std::move(feats));
  SquareMatrix a = normalized_adjacency(graph);
  ctx.norm_adj = Tensor(n, n, std::move(a.data));
  return ctx;
}

PageContext make_page_context(const Annotations& annotations, const Raster& screenshot, const GraphOptions& options) {
  return make_page_context(build_graph(annotations.components, options), annotations.page, screenshot);
}

// --- model -----------------------------------------------------------------

ToyModel::ToyModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.d_model;
  Rng rng(derive_seed(config_.seed, "model-init"));
  tok_emb_ = make_param("tok_emb", config_.vocab, d, rng, 0.5);
  pos_emb_ = make_param("pos_emb", config_.max_seq_len, d, rng, 0.1);
  patch_proj_ = make_param("patch_proj", 3, d, rng);
  patch_pos_ = make_param("patch_pos", 64, d, rng, 0.1);
  std::size_t in = config_.feature_dim;
  for (std::size_t l = 0; l < config_.gcn_layers; ++l) {
    gcn_.push_back(make_param("gcn." + std::to_string(l), in, d, rng));
    in = d;
  }
  resampler_ = Resampler::init(d, config_.n_latents, rng, "resampler");
  for (std::size_t i = 0; i < config_.n_fusion_layers; ++i) {
    visual_gca_.push_back(GcaBlock::init(d, rng, "fusion." + std::to_string(i) + ".visual"));
    graph_gca_.push_back(GcaBlock::init(d, rng, "fusion." + std::to_string(i) + ".graph"));
  }
  for (std::size_t i = 0; i < config_.n_decoder_layers; ++i)
    decoder_.push_back(DecoderLayer::init(d, rng, "decoder." + std::to_string(i)));
  final_gamma_ = make_const_param("final.gamma", 1, d, 1.0);
  final_beta_ = make_const_param("final.beta", 1, d, 0.0);
  out_proj_ = make_param("out_proj", d, config_.vocab, rng);
}

std::vector<Parameter*> ToyModel::parameters() {
  std::vector<Parameter*> out;
  for (auto* p : {&tok_emb_, &pos_emb_, &patch_proj_, &patch_pos_}) out.push_back(p);
  for (auto& p : gcn_) out.push_back(&p);
  for (auto* p : resampler_.parameters()) out.push_back(p);
  for (std::size_t i = 0; i < visual_gca_.size(); ++i) {
    for (auto* p : visual_gca_[i].parameters()) out.push_back(p);
    for (auto* p : graph_gca_[i].parameters()) out.push_back(p);
  }
  for (auto& l : decoder_)
    for (auto* p : l.parameters()) out.push_back(p);
  for (auto* p : {&final_gamma_, &final_beta_, &out_proj_}) out.push_back(p);
  return out;
}

std::vector<const Parameter*> ToyModel::parameters() const {
  auto ps = const_cast<ToyModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

ToyModel::Bound ToyModel::bind(Tape& t) {
  Bound b;
  b.tok_emb = t.param(tok_emb_);
  b.pos_emb = t.param(pos_emb_);
  b.patch_proj = t.param(patch_proj_);
  b.patch_pos = t.param(patch_pos_);
  for (auto& p : gcn_) b.gcn.push_back(t.param(p));
  b.resampler = nn::bind(t, resampler_);
  for (std::size_t i = 0; i < visual_gca_.size(); ++i) {
    b.visual_gca.push_back(nn::bind(t, visual_gca_[i]));
    b.graph_gca.push_back(nn::bind(t, graph_gca_[i]));
  }
  for (auto& l : decoder_) b.decoder.push_back(nn::bind(t, l));
  b.final_gamma = t.param(final_gamma_);
  b.final_beta = t.param(final_beta_);
  b.out_proj = t.param(out_proj_);
  return b;
}

ToyModel::Bound ToyModel::bind(Tape& t) const {
  Bound b;
  b.tok_emb = t.param(tok_emb_);
  b.pos_emb = t.param(pos_emb_);
  b.patch_proj = t.param(patch_proj_);
  b.patch_pos = t.param(patch_pos_);
  for (const auto& p : gcn_) b.gcn.push_back(t.param(p));
  b.resampler = nn::bind(t, resampler_);
  for (std::size_t i = 0; i < visual_gca_.size(); ++i) {
    b.visual_gca.push_back(nn::bind(t, visual_gca_[i]));
    b.graph_gca.push_back(nn::bind(t, graph_gca_[i]));
  }
  for (const auto& l : decoder_) b.decoder.push_back(nn::bind(t, l));
  b.final_gamma = t.param(final_gamma_);
  b.final_beta = t.param(final_beta_);
  b.out_proj = t.param(out_proj_);
  return b;
}

ToyModel::Encoded ToyModel::encode(Tape& t, const Bound& b, const PageContext& ctx) const {
  if (ctx.node_features.cols() != config_.feature_dim)
    throw Error(ErrorKind::shape, "node features have width " + std::to_string(ctx.node_features.cols()) +
                                      ", model expects " + std::to_string(config_.feature_dim));
  if (ctx.patches.rows() != 64 || ctx.patches.cols() != 3)
    throw Error(ErrorKind::shape, "screenshot features must be 64x3");
  Var feats = t.constant(ctx.node_features);
  Var adj = t.constant(ctx.norm_adj);
  Var z = gcn_forward(feats, adj, b.gcn);
  Var v = add(matmul(t.constant(ctx.patches), b.patch_proj), b.patch_pos);
  Var x = resample(v, b.resampler, config_.n_heads);
  return {x, z};
}

Var ToyModel::logits(Tape& t, const Bound& b, const Encoded& enc, std::span<const int> tokens) const {
  (void)t;
  if (tokens.empty()) throw Error(ErrorKind::invalid_input, "empty token sequence");
  if (tokens.size() > config_.max_seq_len)
    throw Error(ErrorKind::shape, "sequence of " + std::to_string(tokens.size()) + " tokens exceeds max_seq_len " +
                                      std::to_string(config_.max_seq_len));
  Var e = add(gather_rows(b.tok_emb, tokens), slice_rows(b.pos_emb, 0, tokens.size()));
  std::size_t f = 0;
  for (std::size_t i = 0; i < b.decoder.size(); ++i) {
    if (i % config_.fusion_every == 0) {
      if (config_.gca_residual) {
        e = gca(enc.visual, e, b.visual_gca[f], true, config_.n_heads);
        e = gca(enc.graph, e, b.graph_gca[f], true, config_.n_heads);
      } else {
        e = fusion_layer(enc.visual, enc.graph, e, b.visual_gca[f], b.graph_gca[f], config_.n_heads);
      }
      ++f;
    }
    e = decoder_layer(e, b.decoder[i], config_.n_heads);
  }
  return matmul(layer_norm(e, b.final_gamma, b.final_beta), b.out_proj);
}

Var sequence_loss(Tape& t, const ToyModel& m, const ToyModel::Bound& b, const PageContext& ctx,
                  std::span<const int> seq) {
  const auto it = std::find(seq.begin(), seq.end(), tok::html);
  if (it == seq.end() || it + 1 == seq.end())
    throw Error(ErrorKind::invalid_input, "training sequence has nothing after <html>");
  const auto start = static_cast<std::size_t>(it - seq.begin());
  auto enc = m.encode(t, b, ctx);
  Var lg = m.logits(t, b, enc, seq.first(seq.size() - 1));
  Var scored = slice_rows(lg, start, seq.size() - 1 - start);
  return cross_entropy(scored, seq.subspan(start + 1));
}

DecodeResult greedy_decode(const ToyModel& m, const PageContext& ctx, std::span<const int> prompt, std::size_t max_len) {
  if (prompt.empty()) throw Error(ErrorKind::invalid_input, "greedy_decode: empty prompt");
  for (int t : prompt)
    if (t < 0 || t >= tok::vocab_size) throw Error(ErrorKind::vocabulary, "unknown token id " + std::to_string(t));
  const std::size_t cap = std::min(max_len == 0 ? m.config().max_seq_len : max_len, m.config().max_seq_len);
  Tensor xv, zv;
  {
    Tape t(false);
    auto b = m.bind(t);
    auto enc = m.encode(t, b, ctx);
    xv = enc.visual.value();
    zv = enc.graph.value();
  }
  std::vector<int> seq(prompt.begin(), prompt.end());
  DecodeResult out;
  while (true) {
    if (seq.size() >= cap) {
      out.truncated = true;
      break;
    }
    Tape t(false);
    auto b = m.bind(t);
    ToyModel::Encoded enc{t.constant(xv), t.constant(zv)};
    const Tensor& lg = m.logits(t, b, enc, seq).value();
    const std::size_t r = lg.rows() - 1;
    int best = 0;
    for (std::size_t c = 1; c < lg.cols(); ++c)
      if (lg(r, c) > lg(r, best)) best = static_cast<int>(c);
    seq.push_back(best);
    out.tokens.push_back(best);
    if (best == tok::sos) break;
  }
  return out;
}

ToySample make_toy_sample(const Annotations& annotations, const Raster& screenshot, std::string_view html) {
  return {make_page_context(annotations, screenshot), build_prompt(encode_html(html), PromptMode::train)};
}

// --- training --------------------------------------------------------------

TrainResult train_toy(std::span<const ToySample> samples, const ModelConfig& config, const TrainOptions& opt) {
  if (samples.empty()) throw Error(ErrorKind::invalid_input, "train_toy: no samples");
  TrainResult res{ToyModel(config), {}};
  ToyModel& m = res.model;
  auto params = m.parameters();
  std::vector<Tensor> m1, m2;
  for (auto* p : params) {
    m1.emplace_back(p->value.rows(), p->value.cols());
    m2.emplace_back(p->value.rows(), p->value.cols());
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());

  for (std::size_t step = 0;; ++step) {
    const bool update = step < opt.steps;
    for (auto* p : params) p->zero_grad();
    double loss = 0.0;
    for (const ToySample& s : samples) {
      Tape t(update);
      auto b = m.bind(t);
      Var l = sequence_loss(t, m, b, s.context, s.target);
      loss += l.value()[0];
      if (update) t.backward(l);
    }
    loss *= inv_n;
    if (!std::isfinite(loss))
      throw Error(ErrorKind::numeric, "training loss is not finite at step " + std::to_string(step));
    res.losses.push_back(loss);
    if (!update) break;

    double norm2 = 0.0;
    for (auto* p : params)
      for (double& g : p->grad.values()) {
        g *= inv_n;
        norm2 += g * g;
      }
    const double norm = std::sqrt(norm2);
    const double clip = (opt.clip_norm > 0.0 && norm > opt.clip_norm) ? opt.clip_norm / norm : 1.0;
    const double t1 = static_cast<double>(step + 1);
    const double bc1 = 1.0 - std::pow(0.9, t1);
    const double bc2 = 1.0 - std::pow(0.999, t1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& w = params[i]->value;
      const Tensor& g = params[i]->grad;
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double gk = g[k] * clip;
        if (opt.optimizer == Optimizer::sgd) {
          w[k] -= opt.lr * gk;
        } else {
          m1[i][k] = 0.9 * m1[i][k] + 0.1 * gk;
          m2[i][k] = 0.999 * m2[i][k] + 0.001 * gk * gk;
          w[k] -= opt.lr * (m1[i][k] / bc1) / (std::sqrt(m2[i][k] / bc2) + 1e-8);
        }
      }
    }
  }
  for (auto* p : params) p->zero_grad();
  return res;
}

// --- pipeline --------------------------------------------------------------

std::string run_inference_pipeline(const Annotations& annotations, const Raster& screenshot, const ToyModel& model,
                                   std::size_t max_len) {
  auto staged = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(stage) + ": " + e.what());
    }
  };
  PageContext ctx = staged("stage 1 (graph)", [&] {
    validate_components(annotations.components);
    return make_page_context(annotations, screenshot);
  });
  std::vector<int> prompt = staged("stage 2 (prompt)", [&] { return build_prompt({}, PromptMode::infer); });
  return staged("stage 3 (decode)", [&] {
    DecodeResult r = greedy_decode(model, ctx, prompt, max_len);
    return decode_html(r.tokens);
  });
}

// --- checkpoints -----------------------------------------------------------

nlohmann::json checkpoint_json(const ToyModel& m) {
  nlohmann::json params = nlohmann::json::array();
  for (const Parameter* p : m.parameters())
    params.push_back({{"name", p->name},
                      {"shape", {p->value.rows(), p->value.cols()}},
                      {"data", std::vector<double>(p->value.values().begin(), p->value.values().end())}});
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", to_json(m.config())},
          {"seed", m.config().seed},
          {"params", std::move(params)}};
}

ToyModel model_from_checkpoint(const nlohmann::json& j, const std::optional<ModelConfig>& expected) {
  auto mismatch = [](const std::string& what) { return Error(ErrorKind::checkpoint_mismatch, "checkpoint: " + what); };
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) throw mismatch("not a toy-model checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) throw mismatch("unsupported version");
  ModelConfig cfg;
  try {
    cfg = config_from_json(j.at("config"));
  } catch (const std::exception& e) {
    throw mismatch(std::string("bad config: ") + e.what());
  }
  if (expected && !(*expected == cfg)) throw mismatch("config differs from the requested model config");
  ToyModel m(cfg);
  auto params = m.parameters();
  const auto& jp = j.at("params");
  if (!jp.is_array() || jp.size() != params.size()) throw mismatch("parameter count differs");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = jp[i];
    Parameter& p = *params[i];
    if (e.value("name", "") != p.name) throw mismatch("expected parameter " + p.name);
    std::vector<std::size_t> shape;
    std::vector<double> data;
    try {
      shape = e.at("shape").get<std::vector<std::size_t>>();
      data = e.at("data").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& ex) {
      throw mismatch("parameter " + p.name + ": " + ex.what());
    }
    if (shape != p.value.shape()) throw mismatch("shape of " + p.name + " differs");
    if (data.size() != p.value.size()) throw mismatch("data of " + p.name + " has the wrong length");
    p.value = Tensor(shape[0], shape[1], std::move(data));
    p.zero_grad();
  }
  return m;
}

void save_checkpoint(const ToyModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << checkpoint_json(m).dump() << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

ToyModel load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ErrorKind::parse, std::string("checkpoint: ") + e.what(), e.byte);
  }
  return model_from_checkpoint(j, expected);
}

}  // namespace d2c::nn
