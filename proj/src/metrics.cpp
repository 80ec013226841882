#include "d2c/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_map>

#include "d2c/error.hpp"
#include "d2c/kernels.hpp"
#include "d2c/renderlab.hpp"

namespace d2c {

namespace {

std::string ngram_key(std::span<const std::string> tokens, std::size_t start, int n) {
  std::string key;
  for (int k = 0; k < n; ++k) {
    if (k) key += '\x1f';
    key += tokens[start + static_cast<std::size_t>(k)];
  }
  return key;
}

struct WeightedCounts {
  std::unordered_map<std::string, std::pair<double, double>> grams;  // key -> (count, weight)
};

WeightedCounts count_ngrams(std::span<const std::string> tokens, std::span<const bool> keyword,
                            int n, double keyword_weight) {
  WeightedCounts out;
  if (tokens.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    bool has_keyword = false;
    for (int k = 0; k < n && !keyword.empty(); ++k) has_keyword |= keyword[i + k];
    auto& slot = out.grams[ngram_key(tokens, i, n)];
    slot.first += 1.0;
    slot.second = has_keyword ? keyword_weight : 1.0;
  }
  return out;
}

double bleu_impl(std::span<const std::string> cand, std::span<const bool> cand_kw,
                 std::span<const std::string> ref, std::span<const bool> ref_kw, int max_n,
                 double keyword_weight) {
  if (max_n < 1) throw Error(ErrorKind::invalid_input, "max_n must be at least 1");
  if (cand.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const WeightedCounts c = count_ngrams(cand, cand_kw, n, keyword_weight);
    const WeightedCounts r = count_ngrams(ref, ref_kw, n, keyword_weight);
    // Iterate in sorted key order so the float sums are reproducible.
    std::vector<const std::pair<const std::string, std::pair<double, double>>*> ordered;
    ordered.reserve(c.grams.size());
    for (const auto& kv : c.grams) ordered.push_back(&kv);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->first < b->first; });
    double matched = 0.0, total = 0.0;
    for (const auto* kv : ordered) {
      const auto [count, weight] = kv->second;
      total += weight * count;
      const auto it = r.grams.find(kv->first);
      if (it != r.grams.end()) matched += weight * std::min(count, it->second.first);
    }
    if (total == 0.0 || matched == 0.0) return 0.0;
    log_sum += std::log(matched / total);
  }
  double bp = 1.0;
  if (cand.size() < ref.size()) {
    bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
  }
  return bp * std::exp(log_sum / max_n);
}

double f1(const StringMultiset& cand, const StringMultiset& ref) {
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;
  const double overlap = static_cast<double>(multiset_overlap(cand, ref));
  if (overlap == 0.0) return 0.0;
  const double p = overlap / static_cast<double>(cand.size());
  const double r = overlap / static_cast<double>(ref.size());
  return 2 * p * r / (p + r);
}

StringMultiset attribute_triples(const DomTree& t) {
  StringMultiset out;
  std::function<void(const DomNode&, const std::string&)> visit = [&](const DomNode& node,
                                                                      const std::string& prefix) {
    const std::string path = prefix.empty() ? node.tag : prefix + "/" + node.tag;
    for (const Attribute& a : node.attributes) out.insert(path + '\x1f' + a.name + '\x1f' + a.value);
    for (const DomNode& child : node.children) {
      if (!child.is_text()) visit(child, path);
    }
  };
  visit(t.root, "");
  return out;
}

}  // namespace

double bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
            int max_n) {
  return bleu_impl(candidate, {}, reference, {}, max_n, 1.0);
}

double weighted_bleu(std::span<const Lexeme> candidate, std::span<const Lexeme> reference,
                     int max_n, double keyword_weight) {
  const auto cand = lexeme_texts(candidate);
  const auto ref = lexeme_texts(reference);
  std::vector<char> ck, rk;  // vector<bool> has no contiguous storage
  for (const Lexeme& l : candidate) ck.push_back(l.keyword);
  for (const Lexeme& l : reference) rk.push_back(l.keyword);
  const std::span<const bool> ckw(reinterpret_cast<const bool*>(ck.data()), ck.size());
  const std::span<const bool> rkw(reinterpret_cast<const bool*>(rk.data()), rk.size());
  return bleu_impl(cand, ckw, ref, rkw, max_n, keyword_weight);
}

std::vector<std::string> lexeme_texts(std::span<const Lexeme> lexemes) {
  std::vector<std::string> out;
  out.reserve(lexemes.size());
  for (const Lexeme& l : lexemes) out.push_back(l.text);
  return out;
}

double tree_bleu(const DomTree& candidate, const DomTree& reference, bool unordered) {
  const StringMultiset ref = height1_subtrees(reference, unordered);
  const StringMultiset cand = height1_subtrees(candidate, unordered);
  if (ref.empty()) return cand.empty() ? 1.0 : 0.0;
  return static_cast<double>(multiset_overlap(cand, ref)) / static_cast<double>(ref.size());
}

HtmlBleuParts html_bleu_parts(std::string_view candidate_src, std::string_view reference_src) {
  DomTree cand, ref;
  try {
    cand = parse_html(candidate_src, true);
    ref = parse_html(reference_src, true);
  } catch (const Error& e) {
    throw Error(ErrorKind::metric, std::string("html_bleu: ") + e.what());
  }
  const auto cand_lex = html_lexemes(cand.source_tokens);
  const auto ref_lex = html_lexemes(ref.source_tokens);

  HtmlBleuParts parts;
  parts.bleu = bleu(lexeme_texts(cand_lex), lexeme_texts(ref_lex));
  parts.keyword = weighted_bleu(cand_lex, ref_lex);
  parts.dom = f1(dom_paths(cand), dom_paths(ref));
  const StringMultiset ca = attribute_triples(cand);
  const StringMultiset ra = attribute_triples(ref);
  double sum = parts.bleu + parts.keyword + parts.dom;
  double count = 3.0;
  if (!ca.empty() || !ra.empty()) {
    parts.attributes = f1(ca, ra);
    sum += *parts.attributes;
    count += 1.0;
  }
  parts.score = sum / count;
  return parts;
}

double html_bleu(std::string_view candidate_src, std::string_view reference_src) {
  return html_bleu_parts(candidate_src, reference_src).score;
}

// --- block metrics ---------------------------------------------------------

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double text_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

BlockMatchResult match_blocks(std::span<const Component> ref, std::span<const Component> cand,
                              double min_sim) {
  if (!(min_sim >= 0.0 && min_sim <= 1.0)) {
    throw Error(ErrorKind::invalid_input, "min_sim must lie in [0, 1]");
  }
  struct Candidate {
    std::size_t r, c;
    double sim, dist;
  };
  std::vector<Candidate> options;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    for (std::size_t j = 0; j < cand.size(); ++j) {
      const Component& a = ref[i];
      const Component& b = cand[j];
      if (a.kind != b.kind) continue;
      double sim;
      if (a.is_text()) {
        sim = text_similarity(a.text.value_or(""), b.text.value_or(""));
        if (sim < min_sim) continue;
      } else {
        sim = iou(a.bbox, b.bbox);
        if (sim < kMinVisualOverlap) continue;
      }
      const double dist = std::hypot(a.bbox.cx() - b.bbox.cx(), a.bbox.cy() - b.bbox.cy());
      options.push_back({i, j, sim, dist});
    }
  }
  std::sort(options.begin(), options.end(), [&](const Candidate& x, const Candidate& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    if (x.dist != y.dist) return x.dist < y.dist;
    if (ref[x.r].id != ref[y.r].id) return ref[x.r].id < ref[y.r].id;
    return cand[x.c].id < cand[y.c].id;
  });

  BlockMatchResult result;
  std::vector<bool> used_ref(ref.size()), used_cand(cand.size());
  for (const Candidate& o : options) {
    if (used_ref[o.r] || used_cand[o.c]) continue;
    used_ref[o.r] = used_cand[o.c] = true;
    result.pairs.push_back({ref[o.r].id, cand[o.c].id, o.sim});
  }
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (!used_ref[i]) result.unmatched_ref.push_back(ref[i].id);
  for (std::size_t j = 0; j < cand.size(); ++j)
    if (!used_cand[j]) result.unmatched_cand.push_back(cand[j].id);
  std::sort(result.unmatched_ref.begin(), result.unmatched_ref.end());
  std::sort(result.unmatched_cand.begin(), result.unmatched_cand.end());
  return result;
}

Lab srgb_to_lab(const Rgb& c) {
  auto linear = [](double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const double r = linear(c[0]), g = linear(c[1]), b = linear(c[2]);
  // sRGB -> XYZ (D65). The white point is the image of (1,1,1) so white maps
  // to a = b = 0.
  constexpr double m[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                              {0.2126729, 0.7151522, 0.0721750},
                              {0.0193339, 0.1191920, 0.9503041}};
  double xyz[3], white[3];
  for (int i = 0; i < 3; ++i) {
    xyz[i] = m[i][0] * r + m[i][1] * g + m[i][2] * b;
    white[i] = m[i][0] + m[i][1] + m[i][2];
  }
  auto f = [](double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
  };
  const double fx = f(xyz[0] / white[0]), fy = f(xyz[1] / white[1]), fz = f(xyz[2] / white[2]);
  return {116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
}

double delta_e76(const Lab& a, const Lab& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

BlockScores block_metrics(std::span<const Component> ref, std::span<const Component> cand,
                          double page_w, double page_h, double min_sim) {
  if (!(page_w > 0) || !(page_h > 0)) {
    throw Error(ErrorKind::invalid_input, "page dimensions must be positive");
  }
  if (ref.empty() && cand.empty()) return {100, 100, 100, 100};
  if (ref.empty() || cand.empty()) return {0, 0, 0, 0};

  const BlockMatchResult m = match_blocks(ref, cand, min_sim);
  std::unordered_map<int, const Component*> ref_by_id, cand_by_id;
  for (const Component& c : ref) ref_by_id[c.id] = &c;
  for (const Component& c : cand) cand_by_id[c.id] = &c;
  std::unordered_map<int, double> ref_sim, cand_sim;
  for (const BlockPair& p : m.pairs) {
    ref_sim[p.ref_id] = p.similarity;
    cand_sim[p.cand_id] = p.similarity;
  }

  // Per-side sums in id order; a perfect match reproduces the denominators
  // bit for bit, so self-comparison scores exactly 100.
  double matched_area = 0, total_area = 0, text_num = 0, text_den = 0;
  auto accumulate_side = [&](std::span<const Component> side,
                             const std::unordered_map<int, double>& sims) {
    for (const Component& c : side) {
      const double a = c.bbox.area();
      const auto it = sims.find(c.id);
      total_area += a;
      if (it != sims.end()) matched_area += a;
      if (c.is_text()) {
        text_den += a;
        if (it != sims.end()) text_num += a * it->second;
      }
    }
  };
  accumulate_side(ref, ref_sim);
  accumulate_side(cand, cand_sim);

  BlockScores s;
  s.block_match = total_area > 0 ? 100 * matched_area / total_area : 0.0;
  s.text = text_den > 0 ? 100 * text_num / text_den : 100.0;

  double weight_sum = 0, pos_sum = 0, color_sum = 0;
  for (const BlockPair& p : m.pairs) {
    const Component& a = *ref_by_id.at(p.ref_id);
    const Component& b = *cand_by_id.at(p.cand_id);
    const double w = a.bbox.area() + b.bbox.area();
    const double shift =
        (std::abs(a.bbox.cx() - b.bbox.cx()) / page_w + std::abs(a.bbox.cy() - b.bbox.cy()) / page_h) /
        2;
    const double pos = std::max(0.0, 1.0 - shift);
    double col = 1.0;
    if (a.color && b.color) {
      col = std::max(0.0, 1.0 - delta_e76(srgb_to_lab(*a.color), srgb_to_lab(*b.color)) / 100.0);
    }
    weight_sum += w;
    pos_sum += w * pos;
    color_sum += w * col;
  }
  s.position = weight_sum > 0 ? 100 * pos_sum / weight_sum : 0.0;
  s.color = weight_sum > 0 ? 100 * color_sum / weight_sum : 0.0;
  return s;
}

// --- pixel metrics ---------------------------------------------------------

namespace {

static_assert(sizeof(Rgb) == 3 * sizeof(double));

std::span<const double> channels(const Raster& r) {
  return {reinterpret_cast<const double*>(r.pixels().data()), r.pixels().size() * 3};
}

void require_same_size(const Raster& a, const Raster& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::invalid_input, "raster dimensions differ");
  }
  if (a.empty()) throw Error(ErrorKind::invalid_input, "empty raster");
}

std::vector<double> plane(const Raster& r, int channel) {
  std::vector<double> out;
  out.reserve(r.pixels().size());
  for (const Rgb& p : r.pixels()) out.push_back(p[static_cast<std::size_t>(channel)]);
  return out;
}

}  // namespace

double mse(const Raster& a, const Raster& b) {
  require_same_size(a, b);
  const auto ca = channels(a);
  return kernels::sum_sq_diff(ca, channels(b)) / static_cast<double>(ca.size());
}

double ssim(const Raster& a, const Raster& b) {
  require_same_size(a, b);
  kernels::SsimWindow w{static_cast<std::size_t>(a.width()),
                        static_cast<std::size_t>(a.height())};
  if (a.width() < static_cast<int>(w.size) || a.height() < static_cast<int>(w.size)) {
    throw Error(ErrorKind::invalid_input, "image smaller than the 8x8 SSIM window");
  }
  double total = 0.0;
  for (int c = 0; c < 3; ++c) total += kernels::ssim_plane(plane(a, c), plane(b, c), w);
  return total / 3.0;
}

double embedding_cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) {
    throw Error(ErrorKind::invalid_input, "embeddings must share a non-zero dimension");
  }
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    throw Error(ErrorKind::undefined_similarity, "cosine similarity of a zero vector");
  }
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

// --- report ----------------------------------------------------------------

bool higher_is_better(std::string_view metric) { return metric != "mse"; }

EvalReport evaluate_pair(const EvalInputs& in) {
  EvalReport report;
  auto guarded = [&](std::initializer_list<const char*> names, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      for (const char* name : names) report.errors[name] = e.what();
    }
  };
  auto put = [&](const std::string& name, double raw, double scale) {
    report.raw[name] = raw;
    report.scores[name] = raw * scale;
  };
  auto put_scaled = [&](const std::string& name, double score) {
    report.raw[name] = score / 100;
    report.scores[name] = score;
  };

  int page_w = in.page_w;
  int page_h = in.page_h;
  if (in.ref_screenshot) {
    page_w = in.ref_screenshot->width();
    if (page_h <= 0) page_h = in.ref_screenshot->height();
  }

  std::optional<RenderedPage> ref_page, cand_page;
  guarded({"block_match", "text", "position", "color", "mse", "ssim"}, [&] {
    if (!in.ref_annotations || !in.ref_screenshot) ref_page = render_html(in.ref_html, page_w, page_h);
    if (page_h <= 0 && ref_page) page_h = ref_page->screenshot.height();
  });
  guarded({"block_match", "text", "position", "color", "mse", "ssim"}, [&] {
    if (page_h > 0) cand_page = render_html(in.cand_html, page_w, page_h);
  });

  if (cand_page && (ref_page || (in.ref_annotations && in.ref_screenshot))) {
    const Annotations& ref_ann = in.ref_annotations ? *in.ref_annotations : ref_page->annotations;
    const Raster& ref_img = in.ref_screenshot ? *in.ref_screenshot : ref_page->screenshot;
    guarded({"block_match", "text", "position", "color"}, [&] {
      const auto& cand_comps = cand_page->annotations.components;
      const BlockScores b = block_metrics(ref_ann.components, cand_comps, page_w, page_h);
      put_scaled("block_match", b.block_match);
      put_scaled("text", b.text);
      put_scaled("position", b.position);
      put_scaled("color", b.color);
      const BlockMatchResult m = match_blocks(ref_ann.components, cand_comps);
      report.diagnostics["block_match"] = {{"pairs", m.pairs.size()},
                                           {"unmatched_ref", m.unmatched_ref},
                                           {"unmatched_cand", m.unmatched_cand}};
    });
    guarded({"mse"}, [&] { put("mse", mse(ref_img, cand_page->screenshot), 100); });
    guarded({"ssim"}, [&] { put("ssim", ssim(ref_img, cand_page->screenshot), 100); });
  }

  guarded({"bleu", "tree_bleu"}, [&] {
    const DomTree ref = parse_html(in.ref_html, true);
    const DomTree cand = parse_html(in.cand_html, true);
    put("bleu",
        bleu(lexeme_texts(html_lexemes(cand.source_tokens)),
             lexeme_texts(html_lexemes(ref.source_tokens))),
        100);
    put("tree_bleu", tree_bleu(cand, ref), 100);
  });
  guarded({"html_bleu"}, [&] {
    const HtmlBleuParts parts = html_bleu_parts(in.cand_html, in.ref_html);
    put("html_bleu", parts.score, 100);
    nlohmann::json d = {{"bleu", parts.bleu}, {"keyword", parts.keyword}, {"dom", parts.dom}};
    d["attributes"] = parts.attributes ? nlohmann::json(*parts.attributes) : nlohmann::json();
    report.diagnostics["html_bleu"] = d;
  });
  if (in.ref_embedding && in.cand_embedding) {
    guarded({"embedding_cosine"}, [&] {
      put("embedding_cosine", embedding_cosine(*in.ref_embedding, *in.cand_embedding), 100);
    });
  }
  return report;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["scores"] = r.scores;
  j["raw"] = r.raw;
  j["errors"] = r.errors;
  nlohmann::json better = nlohmann::json::object();
  for (const auto& [name, value] : r.scores) better[name] = higher_is_better(name);
  j["higher_is_better"] = better;
  j["diagnostics"] = r.diagnostics;
  return j;
}

}  // namespace d2c
