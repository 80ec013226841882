#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2c/components.hpp"
#include "d2c/htmldom.hpp"
#include "json.hpp"

namespace d2c {

// --- code metrics ----------------------------------------------------------

/// Single-pair BLEU: geometric mean of clipped n-gram precisions for
/// n = 1..max_n times the brevity penalty. No smoothing, so any zero
/// precision gives 0. An empty candidate scores 0.
double bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
            int max_n = 4);

/// BLEU where each n-gram carries a weight in both numerator and
/// denominator; n-grams containing a keyword lexeme weigh keyword_weight.
double weighted_bleu(std::span<const Lexeme> candidate, std::span<const Lexeme> reference,
                     int max_n = 4, double keyword_weight = 2.0);

/// |S(cand) ∩ S(ref)| / |S(ref)| over height-1 subtree multisets.
double tree_bleu(const DomTree& candidate, const DomTree& reference, bool unordered = false);

struct HtmlBleuParts {
  double bleu = 0;        // plain BLEU over the lexeme stream
  double keyword = 0;     // keyword-weighted BLEU
  double dom = 0;         // F1 over dom_paths
  std::optional<double> attributes;  // F1 over (path, name, value); unset when neither side has any
  double score = 0;       // mean of the available parts
};

HtmlBleuParts html_bleu_parts(std::string_view candidate_src, std::string_view reference_src);
double html_bleu(std::string_view candidate_src, std::string_view reference_src);

// Lexeme text only, for plain BLEU.
std::vector<std::string> lexeme_texts(std::span<const Lexeme> lexemes);

// --- block metrics ---------------------------------------------------------

/// 1 - levenshtein(a, b) / max(|a|, |b|); two empty strings give 1.
double text_similarity(std::string_view a, std::string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

struct BlockPair {
  int ref_id = 0;
  int cand_id = 0;
  double similarity = 0;
  bool operator==(const BlockPair&) const = default;
};

struct BlockMatchResult {
  std::vector<BlockPair> pairs;
  std::vector<int> unmatched_ref;
  std::vector<int> unmatched_cand;
};

inline constexpr double kMinVisualOverlap = 0.1;

/// Greedy matching: text against text by text similarity (>= min_sim),
/// visual against visual by IoU (>= kMinVisualOverlap). Highest similarity
/// first; ties go to the smaller center distance, then the lower id pair.
BlockMatchResult match_blocks(std::span<const Component> ref, std::span<const Component> cand,
                              double min_sim = 0.5);

struct BlockScores {
  double block_match = 0, text = 0, position = 0, color = 0;  // 0..100
};

BlockScores block_metrics(std::span<const Component> ref, std::span<const Component> cand,
                          double page_w, double page_h, double min_sim = 0.5);

using Lab = std::array<double, 3>;
Lab srgb_to_lab(const Rgb& c);
double delta_e76(const Lab& a, const Lab& b);

// --- pixel metrics ---------------------------------------------------------

/// Mean squared channel difference on [0,1] values (not scaled).
double mse(const Raster& a, const Raster& b);
/// Mean SSIM over 8x8 windows, averaged over channels (not scaled).
double ssim(const Raster& a, const Raster& b);

double embedding_cosine(std::span<const double> u, std::span<const double> v);

// --- batch report ----------------------------------------------------------

inline const std::vector<std::string>& all_metric_names() {
  static const std::vector<std::string> names = {
      "block_match", "text", "position", "color", "bleu", "html_bleu",
      "tree_bleu",   "mse",  "ssim",     "embedding_cosine"};
  return names;
}

bool higher_is_better(std::string_view metric);

struct EvalReport {
  std::map<std::string, double> scores;      // reported scale
  std::map<std::string, double> raw;         // native scale (0..1 or >=0)
  std::map<std::string, std::string> errors; // per-metric failures
  nlohmann::json diagnostics = nlohmann::json::object();
};

struct EvalInputs {
  std::string ref_html;
  std::string cand_html;
  std::optional<Annotations> ref_annotations;
  std::optional<Raster> ref_screenshot;
  int page_w = 320;
  int page_h = 0;  // 0: taken from the reference screenshot or layout
  std::optional<std::vector<double>> ref_embedding;
  std::optional<std::vector<double>> cand_embedding;
};

/// Renders what is missing and computes every metric. Metric failures are
/// recorded per metric and never abort the report.
EvalReport evaluate_pair(const EvalInputs& in);

nlohmann::json to_json(const EvalReport& r);

}  // namespace d2c
