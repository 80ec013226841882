// d2c command-line tool: synth | graph | eval | render | kernel-check |
// train-toy | generate.
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 parse, 4 empty input, 5 verification
// failure, 6 checkpoint mismatch.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "d2c/components.hpp"
#include "d2c/error.hpp"
#include "d2c/kernels.hpp"
#include "d2c/metrics.hpp"
#include "d2c/neural/gradcheck.hpp"
#include "d2c/neural/model.hpp"
#include "d2c/pagegraph.hpp"
#include "d2c/renderlab.hpp"
#include "d2c/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kParse = 3, kEmpty = 4, kVerify = 5, kCheckpoint = 6 };

struct Failure : std::runtime_error {
  int code;
  Failure(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string format = "json";
  int threads = 1;
  std::string config;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in || fs::is_directory(p)) throw Failure(kIo, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, std::string_view s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Failure(kIo, "cannot write '" + p.string() + "'");
  out << s;
  out.close();
  if (!out) throw Failure(kIo, "write failed for '" + p.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Failure(kIo, "cannot create directory '" + dir.string() + "'");
}

std::string line_col(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_json_file(const fs::path& p) {
  const std::string text = read_text(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t off = e.byte > 0 ? e.byte - 1 : 0;
    throw Failure(kParse, p.string() + ": " + line_col(text, off) + ": malformed JSON");
  }
}

d2c::Annotations read_annotations(const fs::path& p) {
  if (!fs::exists(p)) throw Failure(kIo, "cannot read '" + p.string() + "'");
  try {
    return d2c::load_annotations(p.string());
  } catch (const d2c::ParseError& e) {
    throw Failure(kParse, p.string() + ": " + line_col(read_text(p), e.offset()) + ": malformed JSON");
  } catch (const d2c::Error& e) {
    if (e.kind() == d2c::ErrorKind::io) throw Failure(kIo, e.what());
    throw Failure(kParse, p.string() + ": " + e.what());
  }
}

d2c::Raster read_image(const fs::path& p) {
  if (!fs::exists(p)) throw Failure(kIo, "cannot read '" + p.string() + "'");
  return d2c::read_raster(p.string());
}

std::string num(double v) { return json(v).dump(); }

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out + "\"";
}

// --- config files ------------------------------------------------------------

std::map<std::string, std::string> load_config(const fs::path& p) {
  const std::string text = read_text(p);
  std::map<std::string, std::string> kv;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Failure(kParse, p.string() + ": " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": malformed JSON");
    }
    for (const auto& [k, v] : j.items()) {
      if (v.is_object() || v.is_array() || v.is_null())
        throw Failure(kUsage, "config key '" + k + "' must be a scalar");
      kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return kv;
  }
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Failure(kParse, p.string() + ": line " + std::to_string(n) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto s0 = s.find_first_not_of(" \t\r");
      const auto s1 = s.find_last_not_of(" \t\r");
      return s0 == std::string::npos ? std::string() : s.substr(s0, s1 - s0 + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

// Config values fill options that were not given on the command line.
void apply_config(const std::map<std::string, std::string>& kv, std::vector<CLI::App*> scopes) {
  for (const auto& [key, value] : kv) {
    CLI::Option* target = nullptr;
    for (CLI::App* app : scopes) {
      for (CLI::Option* opt : app->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string name = opt->get_lnames().front();
        if (name == "help" || name == "config") continue;
        if (normalize_key(name) == normalize_key(key)) target = opt;
      }
      if (target) break;
    }
    if (!target) throw Failure(kUsage, "unknown config key '" + key + "'");
    if (target->count() > 0) continue;  // flag wins
    if (target->get_type_size() == 0) {
      if (value == "true" || value == "1") target->add_result("true");
      else if (value != "false" && value != "0") throw Failure(kUsage, "config key '" + key + "' expects true/false");
      else continue;
    } else {
      target->add_result(value);
    }
    try {
      target->run_callback();
    } catch (const CLI::Error& e) {
      throw Failure(kUsage, "config key '" + key + "': " + e.what());
    }
  }
}

// --- manifests ---------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  fs::path html, components, screenshot, candidate;
};

// Accepts the synth manifest ({"samples": [{id, html, components,
// screenshot, candidate?}]}) or a bare array of {id, ref_html, cand_html,
// ref_annotations?, ref_screenshot?}.
std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  const json j = parse_json_file(path);
  const fs::path base = path.parent_path();
  const json* list = &j;
  if (j.is_object() && j.contains("samples")) list = &j["samples"];
  if (!list->is_array()) throw Failure(kParse, path.string() + ": manifest needs a list of samples");
  std::vector<ManifestEntry> out;
  for (const auto& s : *list) {
    auto pick = [&](const char* a, const char* b) -> const json* {
      if (!s.is_object()) return nullptr;
      for (const char* key : {a, b})
        if (s.contains(key) && !s[key].is_null()) return &s[key];
      return nullptr;
    };
    auto rel = [&](const char* a, const char* b) -> fs::path {
      const json* v = pick(a, b);
      if (!v) return {};
      if (!v->is_string()) throw Failure(kParse, path.string() + ": '" + a + "' must be a path string");
      return base / v->get<std::string>();
    };
    const json* id = pick("id", "id");
    if (!id || !pick("ref_html", "html"))
      throw Failure(kParse, path.string() + ": every sample needs an id and a reference html path");
    ManifestEntry e;
    e.id = id->is_string() ? id->get<std::string>() : id->dump();
    e.html = rel("ref_html", "html");
    e.components = rel("ref_annotations", "components");
    e.screenshot = rel("ref_screenshot", "screenshot");
    e.candidate = pick("cand_html", "candidate") ? rel("cand_html", "candidate") : e.html;
    out.push_back(std::move(e));
  }
  return out;
}

// --- synth -------------------------------------------------------------------

int cmd_synth(const Globals& g, int count, const std::string& complexity, const std::string& image_format) {
  const auto cx = d2c::parse_complexity(complexity);
  if (!cx) throw Failure(kUsage, "unknown complexity '" + complexity + "'");
  if (count < 0) throw Failure(kUsage, "--count must be non-negative");
  const fs::path dir = g.out_dir;
  ensure_dir(dir);

  std::vector<d2c::SynthPage> pages(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static) num_threads(g.threads)
  for (int k = 0; k < count; ++k) pages[k] = d2c::synth_page(d2c::derive_seed(g.seed, "synth", k), *cx);

  json samples = json::array();
  for (int k = 0; k < count; ++k) {
    const std::string id = "page_" + std::to_string(k);
    const std::string html = id + ".html", comps = id + ".components.json", shot = id + "." + image_format;
    write_text(dir / html, pages[k].html);
    try {
      d2c::save_annotations(pages[k].annotations, (dir / comps).string());
      d2c::write_raster(pages[k].screenshot, (dir / shot).string());
    } catch (const d2c::Error& e) {
      throw Failure(kIo, e.what());
    }
    samples.push_back({{"id", id}, {"html", html}, {"components", comps}, {"screenshot", shot}});
  }
  json manifest = {{"version", 1},
                   {"seed", g.seed},
                   {"complexity", complexity},
                   {"page_width", d2c::kSynthPageWidth},
                   {"samples", samples}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << count << " samples to " << dir.string() << "\n";
  return kOk;
}

// --- graph -------------------------------------------------------------------

int cmd_graph(const std::string& components, double threshold, const std::string& weighting, const std::string& dot,
              const std::string& output) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Failure(kUsage, "--iou-threshold must be in (0, 1]");
  d2c::GraphOptions opt;
  opt.iou_threshold = threshold;
  if (weighting == "iou") opt.weighting = d2c::EdgeWeighting::iou;
  else if (weighting != "unit") throw Failure(kUsage, "--edge-weight must be unit or iou");
  const d2c::Annotations ann = read_annotations(components);
  const d2c::PageGraph graph = d2c::build_graph(ann.components, opt);
  const std::string text = d2c::graph_to_json(graph).dump(2) + "\n";
  if (output.empty()) std::cout << text;
  else write_text(output, text);
  if (!dot.empty()) write_text(dot, d2c::graph_to_dot(graph));
  return kOk;
}

// --- eval --------------------------------------------------------------------

std::vector<std::string> parse_metric_list(const std::string& list) {
  const auto& known = d2c::all_metric_names();
  if (list.empty()) {
    std::vector<std::string> out;
    for (const auto& m : known)
      if (m != "embedding_cosine") out.push_back(m);
    return out;
  }
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string m = normalize_key(item);
    if (m == "treebleu") m = "tree_bleu";
    if (m == "htmlbleu") m = "html_bleu";
    if (m == "blockmatch") m = "block_match";
    if (std::find(known.begin(), known.end(), m) == known.end()) throw Failure(kUsage, "unknown metric '" + item + "'");
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

struct EvalRow {
  std::string id;
  bool ok = false;
  std::map<std::string, double> scores;
  std::string error;
};

EvalRow eval_one(const ManifestEntry& e, const std::vector<std::string>& metrics) {
  EvalRow row{e.id, false, {}, ""};
  try {
    d2c::EvalInputs in;
    in.ref_html = read_text(e.html);
    in.cand_html = read_text(e.candidate);
    if (!e.components.empty()) {
      in.ref_annotations = read_annotations(e.components);
      if (in.ref_annotations->page.width > 0) in.page_w = in.ref_annotations->page.width;
      if (in.ref_annotations->page.height > 0) in.page_h = in.ref_annotations->page.height;
    }
    if (!e.screenshot.empty()) in.ref_screenshot = read_image(e.screenshot);
    const d2c::EvalReport r = d2c::evaluate_pair(in);
    std::string errs;
    for (const auto& m : metrics) {
      if (auto it = r.scores.find(m); it != r.scores.end()) {
        row.scores[m] = it->second;
      } else {
        auto er = r.errors.find(m);
        errs += (errs.empty() ? "" : "; ") + m + ": " + (er != r.errors.end() ? er->second : "not computed");
      }
    }
    row.ok = !row.scores.empty();
    row.error = errs;
  } catch (const std::exception& ex) {
    row.ok = false;
    row.scores.clear();
    row.error = ex.what();
  }
  return row;
}

int cmd_eval(const Globals& g, const std::string& manifest, const std::string& metric_list, std::string report) {
  const std::vector<std::string> metrics = parse_metric_list(metric_list);
  const auto entries = read_manifest(manifest);
  if (entries.empty()) throw Failure(kEmpty, "manifest has no samples");
  if (report.empty()) report = (fs::path(g.out_dir) / "report").string();
  ensure_dir(fs::path(report).parent_path().empty() ? fs::path(".") : fs::path(report).parent_path());

  std::vector<EvalRow> rows(entries.size());
#pragma omp parallel for schedule(dynamic) num_threads(g.threads)
  for (std::size_t i = 0; i < entries.size(); ++i) rows[i] = eval_one(entries[i], metrics);

  std::map<std::string, double> sums;
  std::map<std::string, std::size_t> counts;
  std::size_t evaluated = 0;
  for (const EvalRow& r : rows) {
    if (!r.ok) continue;
    ++evaluated;
    for (const auto& [m, v] : r.scores) {
      sums[m] += v;
      ++counts[m];
    }
  }
  json mean = json::object();
  for (const auto& m : metrics)
    mean[m] = counts[m] ? json(sums[m] / static_cast<double>(counts[m])) : json();

  json jrows = json::array();
  std::ostringstream csv;
  csv << "id,status";
  for (const auto& m : metrics) csv << ',' << m;
  csv << ",error\n";
  for (const EvalRow& r : rows) {
    json jr = {{"id", r.id}, {"status", r.ok ? "ok" : "error"}, {"scores", r.scores}};
    if (!r.error.empty()) jr["error"] = r.error;
    jrows.push_back(jr);
    csv << csv_field(r.id) << ',' << (r.ok ? "ok" : "error");
    for (const auto& m : metrics) {
      csv << ',';
      if (auto it = r.scores.find(m); it != r.scores.end()) csv << num(it->second);
    }
    csv << ',' << csv_field(r.error) << '\n';
  }
  csv << "mean,mean";
  for (const auto& m : metrics) csv << ',' << (mean[m].is_null() ? "" : num(mean[m].get<double>()));
  csv << ",\n";

  json out = {{"metrics", metrics},
              {"samples", jrows},
              {"mean", mean},
              {"evaluated", evaluated},
              {"failed", rows.size() - evaluated}};
  write_text(report + ".json", out.dump(2) + "\n");
  write_text(report + ".csv", csv.str());

  if (g.format == "csv") {
    std::cout << "metric,mean\n";
    for (const auto& m : metrics) std::cout << m << ',' << (mean[m].is_null() ? "" : num(mean[m].get<double>())) << '\n';
  } else {
    std::cout << json({{"mean", mean}, {"evaluated", evaluated}, {"failed", rows.size() - evaluated}}).dump(2) << '\n';
  }
  if (evaluated == 0) throw Failure(kEmpty, "no sample could be evaluated");
  return kOk;
}

// --- render ------------------------------------------------------------------

int cmd_render(const Globals& g, const std::string& html, int width, int height, const std::string& image_format) {
  if (width <= 0 || height < 0) throw Failure(kUsage, "page size must be positive");
  const std::string src = read_text(html);
  const d2c::RenderedPage page = d2c::render_html(src, width, height);
  const fs::path dir = g.out_dir;
  ensure_dir(dir);
  const std::string stem = fs::path(html).stem().string();
  try {
    d2c::write_raster(page.screenshot, (dir / (stem + "." + image_format)).string());
    d2c::save_annotations(page.annotations, (dir / (stem + ".components.json")).string());
  } catch (const d2c::Error& e) {
    throw Failure(kIo, e.what());
  }
  std::cout << "rendered " << page.annotations.components.size() << " components, " << page.screenshot.width() << "x"
            << page.screenshot.height() << "\n";
  return kOk;
}

// --- kernel-check ------------------------------------------------------------

int cmd_kernel_check(const Globals& g, int seeds, const std::string& broken) {
  if (seeds <= 0) throw Failure(kUsage, "--seeds must be positive");
  d2c::nn::set_gradient_fault(broken);
  d2c::nn::KernelCheckOptions opt;
  opt.seeds = static_cast<std::size_t>(seeds);
  opt.base_seed = g.seed;
  const auto results = d2c::nn::run_kernel_checks(opt);
  d2c::nn::set_gradient_fault("");
  std::vector<std::string> failed;
  json j = json::array();
  for (const auto& r : results) {
    if (!r.passed) failed.push_back(r.name);
    j.push_back({{"name", r.name}, {"passed", r.passed}, {"max_rel_error", r.max_rel_error}, {"detail", r.detail}});
    if (g.format != "json") {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3e", r.max_rel_error);
      std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " max_rel_err=" << buf
                << (r.detail.empty() ? "" : " (" + r.detail + ")") << "\n";
    }
  }
  if (g.format == "json") std::cout << j.dump(2) << "\n";
  if (!failed.empty()) {
    std::string names;
    for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
    throw Failure(kVerify, "kernel check failed: " + names);
  }
  std::cerr << "all " << results.size() << " checks passed\n";
  return kOk;
}

// --- train-toy / generate ----------------------------------------------------

struct ModelFlags {
  std::size_t d_model = 32, n_fusion_layers = 0, n_decoder_layers = 1, fusion_every = 1, n_latents = 64,
              gcn_layers = 2, n_heads = 1, max_seq_len = 256;
  bool gca_residual = false;
  std::vector<CLI::Option*> options;

  void add(CLI::App* sub) {
    options = {sub->add_option("--d-model", d_model, "Model width")->capture_default_str(),
               sub->add_option("--n-fusion-layers", n_fusion_layers, "Fusion layers (0 = derived)"),
               sub->add_option("--n-decoder-layers", n_decoder_layers, "Decoder layers")->capture_default_str(),
               sub->add_option("--fusion-every", fusion_every, "Fusion before every k-th decoder layer")
                   ->capture_default_str(),
               sub->add_option("--n-latents", n_latents, "Resampler latents")->capture_default_str(),
               sub->add_option("--gcn-layers", gcn_layers, "GCN layers")->capture_default_str(),
               sub->add_option("--n-heads", n_heads, "Attention heads")->capture_default_str(),
               sub->add_option("--max-seq-len", max_seq_len, "Maximum sequence length")->capture_default_str(),
               sub->add_flag("--gca-residual", gca_residual, "Residual inside each GCA block")};
  }

  d2c::nn::ModelConfig config(std::uint64_t seed) const {
    d2c::nn::ModelConfig c;
    c.d_model = d_model;
    c.n_decoder_layers = n_decoder_layers;
    c.fusion_every = fusion_every;
    c.n_fusion_layers =
        n_fusion_layers ? n_fusion_layers : (n_decoder_layers + std::max<std::size_t>(fusion_every, 1) - 1) /
                                                std::max<std::size_t>(fusion_every, 1);
    c.n_latents = n_latents;
    c.gcn_layers = gcn_layers;
    c.n_heads = n_heads;
    c.max_seq_len = max_seq_len;
    c.gca_residual = gca_residual;
    c.seed = seed;
    return c;
  }
};

struct LoadedSample {
  std::string id;
  std::string html;
  d2c::Annotations annotations;
  d2c::Raster screenshot;
};

fs::path manifest_in(const std::string& data) {
  if (!fs::is_directory(data)) throw Failure(kIo, "data directory '" + data + "' not found");
  const fs::path m = fs::path(data) / "manifest.json";
  if (!fs::exists(m)) throw Failure(kIo, "no manifest.json in '" + data + "'");
  return m;
}

LoadedSample load_sample(const ManifestEntry& e) {
  if (e.components.empty() || e.screenshot.empty())
    throw Failure(kParse, "sample " + e.id + " lacks components or screenshot");
  return {e.id, read_text(e.html), read_annotations(e.components), read_image(e.screenshot)};
}

int cmd_train(const Globals& g, const std::string& data, const ModelFlags& mf, const d2c::nn::TrainOptions& opt,
              int n_samples, std::string checkpoint, std::string loss_csv) {
  const d2c::nn::ModelConfig cfg = mf.config(g.seed);
  try {
    cfg.validate();
  } catch (const d2c::Error& e) {
    throw Failure(kUsage, e.what());
  }
  if (n_samples <= 0 || n_samples > 16) throw Failure(kUsage, "--samples must be in 1..16");
  const auto entries = read_manifest(manifest_in(data));
  std::vector<d2c::nn::ToySample> samples;
  std::vector<std::string> ids;
  const std::size_t max_tokens = std::min<std::size_t>(256, cfg.max_seq_len);
  for (const auto& e : entries) {
    if (samples.size() == static_cast<std::size_t>(n_samples)) break;
    const LoadedSample s = load_sample(e);
    auto ts = d2c::nn::make_toy_sample(s.annotations, s.screenshot, s.html);
    if (ts.target.size() > max_tokens) continue;
    samples.push_back(std::move(ts));
    ids.push_back(e.id);
  }
  if (samples.empty()) throw Failure(kEmpty, "no sample fits in " + std::to_string(max_tokens) + " tokens");

  const auto res = d2c::nn::train_toy(samples, cfg, opt);
  ensure_dir(g.out_dir);
  if (checkpoint.empty()) checkpoint = (fs::path(g.out_dir) / "model.json").string();
  if (loss_csv.empty()) loss_csv = (fs::path(g.out_dir) / "loss.csv").string();
  json ck = d2c::nn::checkpoint_json(res.model);
  ck["samples"] = ids;
  write_text(checkpoint, ck.dump() + "\n");
  std::ostringstream csv;
  csv << "step,loss\n";
  for (std::size_t i = 0; i < res.losses.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", res.losses[i]);
    csv << i << ',' << buf << '\n';
  }
  write_text(loss_csv, csv.str());
  std::cout << "trained on " << samples.size() << " samples, " << opt.steps << " steps, loss " << num(res.losses.front())
            << " -> " << num(res.losses.back()) << "\n";
  return kOk;
}

int cmd_generate(const Globals& g, const std::string& checkpoint, const ModelFlags& mf, const std::string& data,
                 int sample, const std::string& components, const std::string& screenshot, std::string output,
                 int max_len) {
  if (max_len < 0) throw Failure(kUsage, "--max-len must be non-negative");
  json j = parse_json_file(checkpoint);
  d2c::nn::ToyModel model = [&] {
    try {
      return d2c::nn::model_from_checkpoint(j);
    } catch (const d2c::Error& e) {
      throw Failure(kCheckpoint, e.what());
    } catch (const json::exception& e) {
      throw Failure(kCheckpoint, std::string("checkpoint: ") + e.what());
    }
  }();
  // Model flags given explicitly must agree with the checkpoint.
  const auto want = mf.config(model.config().seed);
  const auto& have = model.config();
  const std::pair<const char*, bool> same[] = {
      {"d_model", want.d_model == have.d_model},
      {"n_fusion_layers", mf.n_fusion_layers == 0 || want.n_fusion_layers == have.n_fusion_layers},
      {"n_decoder_layers", want.n_decoder_layers == have.n_decoder_layers},
      {"fusion_every", want.fusion_every == have.fusion_every},
      {"n_latents", want.n_latents == have.n_latents},
      {"gcn_layers", want.gcn_layers == have.gcn_layers},
      {"n_heads", want.n_heads == have.n_heads},
      {"max_seq_len", want.max_seq_len == have.max_seq_len},
      {"gca_residual", want.gca_residual == have.gca_residual}};
  for (std::size_t i = 0; i < mf.options.size(); ++i)
    if (mf.options[i]->count() > 0 && !same[i].second)
      throw Failure(kCheckpoint, std::string("checkpoint config mismatch: ") + same[i].first);

  d2c::Annotations ann;
  d2c::Raster shot;
  if (!data.empty()) {
    const auto entries = read_manifest(manifest_in(data));
    if (sample < 0 || static_cast<std::size_t>(sample) >= entries.size())
      throw Failure(kEmpty, "sample " + std::to_string(sample) + " not in manifest");
    LoadedSample s = load_sample(entries[sample]);
    ann = std::move(s.annotations);
    shot = std::move(s.screenshot);
  } else {
    if (components.empty() || screenshot.empty())
      throw Failure(kUsage, "generate needs --data or both --components and --screenshot");
    ann = read_annotations(components);
    shot = read_image(screenshot);
  }
  const std::string html = d2c::nn::run_inference_pipeline(ann, shot, model, static_cast<std::size_t>(max_len));
  ensure_dir(g.out_dir);
  if (output.empty()) output = (fs::path(g.out_dir) / "generated.html").string();
  write_text(output, html);
  std::cout << "wrote " << output << " (" << html.size() << " bytes)\n";
  return kOk;
}

int exit_for(const d2c::Error& e) {
  switch (e.kind()) {
    case d2c::ErrorKind::io: return kIo;
    case d2c::ErrorKind::parse: return kParse;
    case d2c::ErrorKind::checkpoint_mismatch: return kCheckpoint;
    default: return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"d2c: screenshot-to-code data, metrics and toy model tools"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  Globals g;
  app.add_option("--seed", g.seed, "Root seed");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--config", g.config, "Config file (key=value lines or a JSON object)");

  auto* synth = app.add_subcommand("synth", "Generate synthetic pages");
  int count = 1;
  std::string complexity = "small", synth_image = "png";
  synth->add_option("--count", count, "Number of pages");
  synth->add_option("--complexity", complexity, "small or medium");
  synth->add_option("--image-format", synth_image, "png or ppm")->check(CLI::IsMember({"png", "ppm"}));

  auto* graph = app.add_subcommand("graph", "Build the page graph of a components file");
  std::string g_components, g_dot, g_output, g_weight = "unit";
  double g_threshold = 0.8;
  graph->add_option("--components", g_components, "Annotation JSON")->required();
  graph->add_option("--iou-threshold", g_threshold, "Overlap edge threshold (strict)");
  graph->add_option("--edge-weight", g_weight, "unit or iou");
  graph->add_option("--dot", g_dot, "Also write Graphviz DOT here");
  graph->add_option("--output", g_output, "Write graph JSON here instead of stdout");

  auto* eval = app.add_subcommand("eval", "Score candidate pages against references");
  std::string e_manifest, e_metrics, e_report;
  eval->add_option("--manifest", e_manifest, "Manifest JSON")->required();
  eval->add_option("--metrics", e_metrics, "Comma-separated metric names (default: all)");
  eval->add_option("--report", e_report, "Report path prefix (.json and .csv are added)");

  auto* render = app.add_subcommand("render", "Render an HTML file to screenshot + components");
  std::string r_html, r_image = "png";
  int r_width = d2c::kSynthPageWidth, r_height = 0;
  render->add_option("--html", r_html, "HTML file")->required();
  render->add_option("--width", r_width, "Page width");
  render->add_option("--height", r_height, "Page height (0 = content height)");
  render->add_option("--image-format", r_image, "png or ppm")->check(CLI::IsMember({"png", "ppm"}));

  auto* kcheck = app.add_subcommand("kernel-check", "Gradient and invariant checks of the neural kernels");
  int k_seeds = 20;
  std::string k_broken;
  kcheck->add_option("--seeds", k_seeds, "Random seeds per check");
  kcheck->add_option("--inject-broken-grad", k_broken, "Corrupt one op's backward (harness self-test)")->group("");

  auto* train = app.add_subcommand("train-toy", "Train the toy model on synthesized pages");
  std::string t_data, t_checkpoint, t_loss, t_optimizer = "sgd";
  int t_samples = 4;
  d2c::nn::TrainOptions t_opt;
  ModelFlags t_model;
  train->add_option("--data", t_data, "Directory with manifest.json")->required();
  train->add_option("--steps", t_opt.steps, "Update steps");
  train->add_option("--lr", t_opt.lr, "Step size");
  train->add_option("--optimizer", t_optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
  train->add_option("--clip", t_opt.clip_norm, "Global gradient-norm clip (0 = off)");
  train->add_option("--samples", t_samples, "Samples to train on");
  train->add_option("--checkpoint", t_checkpoint, "Checkpoint output path");
  train->add_option("--loss-csv", t_loss, "Loss curve output path");
  t_model.add(train);

  auto* gen = app.add_subcommand("generate", "Run the inference pipeline with a checkpoint");
  std::string n_checkpoint, n_data, n_components, n_screenshot, n_output;
  int n_sample = 0, n_max_len = 0;
  ModelFlags n_model;
  gen->add_option("--checkpoint", n_checkpoint, "Checkpoint JSON")->required();
  gen->add_option("--data", n_data, "Directory with manifest.json");
  gen->add_option("--sample", n_sample, "Sample index in the manifest");
  gen->add_option("--components", n_components, "Annotation JSON");
  gen->add_option("--screenshot", n_screenshot, "Screenshot (png/ppm)");
  gen->add_option("--output", n_output, "HTML output path");
  gen->add_option("--max-len", n_max_len, "Maximum total tokens (0 = model limit)");
  n_model.add(gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!g.config.empty()) apply_config(load_config(g.config), {sub, &app});
    d2c::kernels::set_num_threads(g.threads);
    t_opt.optimizer = t_optimizer == "adam" ? d2c::nn::Optimizer::adam : d2c::nn::Optimizer::sgd;

    if (sub == synth) return cmd_synth(g, count, complexity, synth_image);
    if (sub == graph) return cmd_graph(g_components, g_threshold, g_weight, g_dot, g_output);
    if (sub == eval) return cmd_eval(g, e_manifest, e_metrics, e_report);
    if (sub == render) return cmd_render(g, r_html, r_width, r_height, r_image);
    if (sub == kcheck) return cmd_kernel_check(g, k_seeds, k_broken);
    if (sub == train) return cmd_train(g, t_data, t_model, t_opt, t_samples, t_checkpoint, t_loss);
    if (sub == gen)
      return cmd_generate(g, n_checkpoint, n_model, n_data, n_sample, n_components, n_screenshot, n_output, n_max_len);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what() << "\n";
    return f.code;
  } catch (const d2c::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
