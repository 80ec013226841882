#include "d2c/renderlab.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "d2c/error.hpp"
#include "d2c/rng.hpp"

namespace d2c {

namespace {

struct NamedColor {
  std::string_view name;
  int r, g, b;
};

constexpr std::array<NamedColor, 16> kBasicColors = {{
    {"black", 0, 0, 0},       {"silver", 192, 192, 192}, {"gray", 128, 128, 128},
    {"white", 255, 255, 255}, {"maroon", 128, 0, 0},     {"red", 255, 0, 0},
    {"purple", 128, 0, 128},  {"fuchsia", 255, 0, 255},  {"green", 0, 128, 0},
    {"lime", 0, 255, 0},      {"olive", 128, 128, 0},    {"yellow", 255, 255, 0},
    {"navy", 0, 0, 128},      {"blue", 0, 0, 255},       {"teal", 0, 128, 128},
    {"aqua", 0, 255, 255},
}};

std::string trim_lower(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Rgb from_bytes(int r, int g, int b) { return {r / 255.0, g / 255.0, b / 255.0}; }

std::optional<double> parse_px(std::string_view v) {
  std::string s = trim_lower(v);
  if (s.size() > 2 && s.ends_with("px")) s.resize(s.size() - 2);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(value) || value < 0) return std::nullopt;
  return value;
}

std::optional<Length> parse_length(std::string_view v, bool allow_percent) {
  const std::string s = trim_lower(v);
  if (s == "auto") return Length{};
  if (allow_percent && s.size() > 1 && s.back() == '%') {
    char* end = nullptr;
    const std::string num = s.substr(0, s.size() - 1);
    const double value = std::strtod(num.c_str(), &end);
    if (end != num.c_str() + num.size() || !(value >= 0 && value <= 100)) return std::nullopt;
    return Length{Length::Unit::percent, value};
  }
  if (auto px = parse_px(s)) return Length{Length::Unit::px, *px};
  return std::nullopt;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

bool is_skipped(std::string_view tag) {
  return tag == "head" || tag == "script" || tag == "style" || tag == "title" || tag == "meta" ||
         tag == "link";
}

double glyphs(std::string_view s) { return static_cast<double>(s.size()) * kGlyphWidth; }

}  // namespace

std::optional<Rgb> parse_color(std::string_view text) {
  const std::string s = trim_lower(text);
  for (const NamedColor& c : kBasicColors) {
    if (s == c.name) return from_bytes(c.r, c.g, c.b);
  }
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  if (s.size() == 4 && s[0] == '#') {
    int v[3];
    for (int k = 0; k < 3; ++k) {
      v[k] = hex(s[k + 1]);
      if (v[k] < 0) return std::nullopt;
    }
    return from_bytes(v[0] * 17, v[1] * 17, v[2] * 17);
  }
  if (s.size() == 7 && s[0] == '#') {
    int v[3];
    for (int k = 0; k < 3; ++k) {
      const int hi = hex(s[1 + 2 * k]), lo = hex(s[2 + 2 * k]);
      if (hi < 0 || lo < 0) return std::nullopt;
      v[k] = hi * 16 + lo;
    }
    return from_bytes(v[0], v[1], v[2]);
  }
  if (s.starts_with("rgb(") && s.back() == ')') {
    std::istringstream in(s.substr(4, s.size() - 5));
    int v[3];
    char comma = 0;
    in >> v[0] >> comma >> v[1] >> comma >> v[2];
    if (!in) return std::nullopt;
    for (int& c : v) c = std::clamp(c, 0, 255);
    return from_bytes(v[0], v[1], v[2]);
  }
  return std::nullopt;
}

Display default_display(std::string_view tag) {
  static constexpr std::array<std::string_view, 5> kInline = {"span", "a", "button", "img",
                                                             "input"};
  return std::find(kInline.begin(), kInline.end(), tag) != kInline.end() ? Display::inline_block
                                                                         : Display::block;
}

StyleProps resolve_style(const DomNode& node, const Rgb& inherited_color) {
  StyleProps style;
  style.color = inherited_color;
  style.display = default_display(node.tag);
  const std::string* attr = node.attribute("style");
  if (!attr) return style;

  // Unknown or malformed declarations are ignored.
  std::size_t pos = 0;
  while (pos <= attr->size()) {
    std::size_t end = attr->find(';', pos);
    if (end == std::string::npos) end = attr->size();
    const std::string_view decl = std::string_view(*attr).substr(pos, end - pos);
    pos = end + 1;
    const std::size_t colon = decl.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key = trim_lower(decl.substr(0, colon));
    const std::string_view value = decl.substr(colon + 1);
    if (key == "background" || key == "background-color") {
      if (auto c = parse_color(value)) style.background_color = c;
    } else if (key == "color") {
      if (auto c = parse_color(value)) style.color = *c;
    } else if (key == "width") {
      if (auto l = parse_length(value, true)) style.width = *l;
    } else if (key == "height") {
      if (auto l = parse_length(value, false)) style.height = *l;
    } else if (key == "margin") {
      if (auto px = parse_px(value)) style.margin = *px;
    } else if (key == "padding") {
      if (auto px = parse_px(value)) style.padding = *px;
    } else if (key == "display") {
      const std::string d = trim_lower(value);
      if (d == "block") style.display = Display::block;
      if (d == "inline-block") style.display = Display::inline_block;
    }
  }
  return style;
}

namespace {

class FlowLayout {
 public:
  std::vector<LayoutBox> boxes;

  // Lays out the children of `node` in the content rectangle starting at
  // (x, y) with the given width. Returns the content height.
  double flow(const DomNode& node, double x, double y, double width, const Rgb& color,
              int depth) {
    double cursor = 0.0;
    double line_y = y;
    double line_h = 0.0;

    auto newline = [&](double min_h) {
      line_y += std::max(line_h, min_h);
      cursor = 0.0;
      line_h = 0.0;
    };
    auto flush = [&] {
      if (cursor > 0.0 || line_h > 0.0) newline(0.0);
    };

    for (const DomNode& child : node.children) {
      if (child.is_text()) {
        place_text(child, x, width, color, depth, cursor, line_y, line_h, newline);
        continue;
      }
      if (is_skipped(child.tag)) continue;
      if (child.tag == "br") {
        newline(kLineHeight);
        continue;
      }

      const StyleProps style = resolve_style(child, color);
      const double m = style.margin;
      const double p = style.padding;
      const double avail = std::max(0.0, width - 2 * m);
      double w = avail;
      if (style.width.unit == Length::Unit::px) {
        w = std::min(style.width.value, avail);
      } else if (style.width.unit == Length::Unit::percent) {
        w = std::min(width * style.width.value / 100.0, avail);
      } else if (style.display == Display::inline_block) {
        w = std::min(preferred_width(child, style), avail);
      }

      double bx, by;
      if (style.display == Display::block) {
        flush();
        bx = x + m;
        by = line_y + m;
      } else {
        if (cursor > 0.0 && cursor + w + 2 * m > width) newline(0.0);
        bx = x + cursor + m;
        by = line_y + m;
      }

      const std::size_t index = boxes.size();
      boxes.push_back(LayoutBox{&child, {}, style, false, std::nullopt, {}, depth});
      const double content_h =
          flow(child, bx + p, by + p, std::max(0.0, w - 2 * p), style.color, depth + 1);
      const double h =
          style.height.unit == Length::Unit::px ? style.height.value : content_h + 2 * p;
      boxes[index].bbox = {bx, by, w, h};

      if (style.display == Display::block) {
        line_y = by + h + m;
      } else {
        line_h = std::max(line_h, h + 2 * m);
        cursor += w + 2 * m;
      }
    }
    flush();
    return line_y - y;
  }

 private:
  template <typename Newline>
  void place_text(const DomNode& leaf, double x, double width, const Rgb& color, int depth,
                  double& cursor, double& line_y, double& line_h, Newline&& newline) {
    const std::vector<std::string> words = split_words(leaf.text.value_or(""));
    if (words.empty()) return;

    LayoutBox box;
    box.node = &leaf;
    box.is_text = true;
    box.text = join_words(words);
    box.style.color = color;
    box.style.display = Display::inline_block;
    box.depth = depth;

    const std::size_t per_line =
        std::max<std::size_t>(1, static_cast<std::size_t>(width / kGlyphWidth));
    std::string frag;
    double frag_x = cursor;
    auto close_fragment = [&] {
      if (!frag.empty()) box.lines.push_back({x + frag_x, line_y, frag});
      frag.clear();
    };

    for (std::string word : words) {
      double need = (frag.empty() ? 0.0 : kGlyphWidth) + glyphs(word);
      if (cursor > 0.0 && cursor + need > width) {
        close_fragment();
        line_h = std::max(line_h, kLineHeight);
        newline(kLineHeight);
        frag_x = 0.0;
        need = glyphs(word);
      }
      // A word wider than the line is broken at character boundaries.
      while (word.size() > per_line) {
        box.lines.push_back({x, line_y, word.substr(0, per_line)});
        word.erase(0, per_line);
        line_h = std::max(line_h, kLineHeight);
        newline(kLineHeight);
        frag_x = 0.0;
        need = glyphs(word);
      }
      if (!frag.empty()) frag += ' ';
      frag += word;
      cursor += need;
      line_h = std::max(line_h, kLineHeight);
    }
    close_fragment();

    double x0 = box.lines.front().x, y0 = box.lines.front().y, x1 = x0, y1 = y0;
    for (const TextLine& line : box.lines) {
      x0 = std::min(x0, line.x);
      y0 = std::min(y0, line.y);
      x1 = std::max(x1, line.x + glyphs(line.text));
      y1 = std::max(y1, line.y + kLineHeight);
    }
    box.bbox = {x0, y0, x1 - x0, y1 - y0};
    boxes.push_back(std::move(box));
  }

  // Unwrapped content width plus padding.
  double preferred_width(const DomNode& node, const StyleProps& style) const {
    double best = 0.0;
    double inline_sum = 0.0;
    for (const DomNode& child : node.children) {
      if (child.is_text()) {
        inline_sum += glyphs(join_words(split_words(child.text.value_or(""))));
        continue;
      }
      if (is_skipped(child.tag)) continue;
      if (child.tag == "br") {
        best = std::max(best, inline_sum);
        inline_sum = 0.0;
        continue;
      }
      const StyleProps cs = resolve_style(child, style.color);
      const double w = cs.width.unit == Length::Unit::px ? cs.width.value
                                                         : preferred_width(child, cs);
      if (cs.display == Display::inline_block) {
        inline_sum += w + 2 * cs.margin;
      } else {
        best = std::max({best, inline_sum, w + 2 * cs.margin});
        inline_sum = 0.0;
      }
    }
    return std::max(best, inline_sum) + 2 * style.padding;
  }
};

const DomNode* find_child(const DomNode& node, std::string_view tag) {
  for (const DomNode& c : node.children) {
    if (c.tag == tag) return &c;
  }
  return nullptr;
}

void fill_rect(Raster& img, const BBox& b, const Rgb& color) {
  const int x0 = std::max(0, static_cast<int>(std::ceil(b.x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(b.y - 0.5)));
  const int x1 = std::min(img.width(), static_cast<int>(std::ceil(b.x + b.w - 0.5)));
  const int y1 = std::min(img.height(), static_cast<int>(std::ceil(b.y + b.h - 0.5)));
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) img.at(x, y) = color;
}

}  // namespace

Layout layout(const DomTree& t, double page_w) {
  if (!(page_w > 0)) throw Error(ErrorKind::invalid_input, "page width must be positive");
  const DomNode* body = find_child(t.root, "body");
  const DomNode& flow_root = body ? *body : t.root;
  FlowLayout engine;
  Layout out;
  out.content_height = engine.flow(flow_root, 0.0, 0.0, page_w, {0.0, 0.0, 0.0}, 0);
  out.boxes = std::move(engine.boxes);
  return out;
}

Raster rasterize(const std::vector<LayoutBox>& boxes, int page_w, int page_h) {
  if (page_w <= 0 || page_h <= 0) {
    throw Error(ErrorKind::invalid_input, "page dimensions must be positive");
  }
  Raster img(page_w, page_h);
  for (const LayoutBox& box : boxes) {
    if (box.is_text) {
      for (const TextLine& line : box.lines) {
        for (std::size_t i = 0; i < line.text.size(); ++i) {
          if (std::isspace(static_cast<unsigned char>(line.text[i]))) continue;
          fill_rect(img, {line.x + kGlyphWidth * static_cast<double>(i), line.y, kGlyphWidth,
                          kLineHeight},
                    box.style.color);
        }
      }
    } else if (box.style.background_color) {
      fill_rect(img, box.bbox, *box.style.background_color);
    }
  }
  return img;
}

std::vector<Component> extract_annotations(const std::vector<LayoutBox>& boxes) {
  std::vector<Component> out;
  for (const LayoutBox& box : boxes) {
    if (!box.bbox.valid()) continue;
    if (box.is_text) {
      out.push_back({static_cast<int>(out.size()), ComponentKind::text, box.bbox, box.text,
                     box.style.color, std::nullopt});
    } else if (box.style.background_color) {
      out.push_back({static_cast<int>(out.size()), ComponentKind::visual, box.bbox,
                     std::nullopt, box.style.background_color, std::nullopt});
    }
  }
  return out;
}

RenderedPage render_html(std::string_view html, int page_w, int page_h) {
  const DomTree tree = parse_html(html, true);
  const Layout lay = layout(tree, page_w);
  RenderedPage page;
  page.content_height = lay.content_height;
  const int h = page_h > 0 ? page_h : std::max(1, static_cast<int>(std::ceil(lay.content_height)));
  page.screenshot = rasterize(lay.boxes, page_w, h);
  page.annotations.page = {page_w, h};

  // Clip to the page; boxes entirely outside it are not visible components.
  const BBox page_box{0, 0, static_cast<double>(page_w), static_cast<double>(h)};
  for (Component c : extract_annotations(lay.boxes)) {
    const double x0 = std::max(c.bbox.x, page_box.x);
    const double y0 = std::max(c.bbox.y, page_box.y);
    const double x1 = std::min(c.bbox.x + c.bbox.w, page_box.w);
    const double y1 = std::min(c.bbox.y + c.bbox.h, page_box.h);
    if (x1 <= x0 || y1 <= y0) continue;
    c.bbox = {x0, y0, x1 - x0, y1 - y0};
    c.id = static_cast<int>(page.annotations.components.size());
    page.annotations.components.push_back(std::move(c));
  }
  return page;
}

std::optional<Complexity> parse_complexity(std::string_view s) {
  if (s == "small") return Complexity::small;
  if (s == "medium") return Complexity::medium;
  return std::nullopt;
}

namespace {

constexpr std::array<std::string_view, 32> kWords = {
    "home",  "news",  "about", "blog",  "shop",  "cart",  "menu",  "login",
    "sky",   "sea",   "sun",   "tree",  "river", "stone", "cloud", "rain",
    "fast",  "calm",  "bold",  "warm",  "fresh", "quiet", "bright", "soft",
    "learn", "build", "share", "read",  "view",  "join",  "start", "more",
};

std::string pick_color(Rng& rng) {
  // Background palette: the basic colors minus white.
  std::string_view name;
  do {
    name = kBasicColors[static_cast<std::size_t>(rng.range(0, 15))].name;
  } while (name == "white");
  return std::string(name);
}

std::string pick_text(Rng& rng) {
  const auto n = rng.range(1, 3);
  std::string out;
  for (std::int64_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += kWords[static_cast<std::size_t>(rng.range(0, kWords.size() - 1))];
  }
  return out;
}

}  // namespace

SynthPage synth_page(std::uint64_t seed, Complexity complexity, int page_w) {
  Rng rng(derive_seed(seed, "synth-page"));
  const bool medium = complexity == Complexity::medium;
  const auto n_blocks = medium ? rng.range(6, 12) : rng.range(3, 5);
  const auto n_texts = medium ? rng.range(5, 10) : rng.range(2, 4);

  struct Block {
    bool inline_block = false;
    std::string color;
    int width = 0, height = 0, margin = 0;
    std::vector<std::string> texts;
  };
  std::vector<Block> content(static_cast<std::size_t>(n_blocks - 2));
  std::vector<std::size_t> text_holders;
  for (std::size_t i = 0; i < content.size(); ++i) {
    Block& b = content[i];
    b.color = pick_color(rng);
    b.inline_block = medium && rng.uniform() < 0.4;
    b.height = 8 * static_cast<int>(rng.range(2, 6));
    if (b.inline_block) {
      b.width = 8 * static_cast<int>(rng.range(4, 12));
    } else {
      if (medium && rng.uniform() < 0.3) b.margin = 4;
      text_holders.push_back(i);
    }
  }

  const std::string header_color = pick_color(rng);
  const std::string footer_color = pick_color(rng);
  std::vector<std::string> header_texts{pick_text(rng)};
  const std::string footer_text = pick_text(rng);
  for (std::int64_t k = 2; k < n_texts; ++k) {
    std::string text = pick_text(rng);
    if (text_holders.empty()) {
      header_texts.push_back(std::move(text));
    } else {
      const auto at = static_cast<std::size_t>(
          rng.range(0, static_cast<std::int64_t>(text_holders.size()) - 1));
      content[text_holders[at]].texts.push_back(std::move(text));
    }
  }
  const bool light_footer_text = medium && rng.uniform() < 0.5;

  const char* heading = medium ? "h1" : "p";
  std::string html = "<html><body>";
  html += "<header style=\"background:" + header_color + "\">";
  for (const auto& t : header_texts) {
    html += std::string("<") + heading + ">" + t + "</" + heading + ">";
  }
  html += "</header>";

  bool in_row = false;
  for (const Block& b : content) {
    if (b.inline_block && !in_row) {
      html += "<section>";
      in_row = true;
    } else if (!b.inline_block && in_row) {
      html += "</section>";
      in_row = false;
    }
    if (b.inline_block) {
      html += "<span style=\"background:" + b.color + ";width:" + std::to_string(b.width) +
              "px;height:" + std::to_string(b.height) + "px\"></span>";
      continue;
    }
    std::string style = "background:" + b.color;
    if (b.margin) style += ";margin:" + std::to_string(b.margin) + "px";
    if (b.texts.empty()) {
      html += "<div style=\"" + style + ";height:" + std::to_string(b.height) + "px\"></div>";
    } else {
      html += "<div style=\"" + style + ";padding:4px\">";
      for (const auto& t : b.texts) html += "<p>" + t + "</p>";
      html += "</div>";
    }
  }
  if (in_row) html += "</section>";

  html += "<footer style=\"background:" + footer_color + "\">";
  html += light_footer_text ? "<p style=\"color:white\">" : "<p>";
  html += footer_text + "</p></footer>";
  html += "</body></html>";

  RenderedPage page = render_html(html, page_w);
  return {std::move(html), std::move(page.annotations), std::move(page.screenshot)};
}

}  // namespace d2c
