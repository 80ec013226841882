#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2c/components.hpp"
#include "d2c/htmldom.hpp"

namespace d2c {

// Fixed pseudo-font cell.
inline constexpr double kGlyphWidth = 8.0;
inline constexpr double kLineHeight = 16.0;

enum class Display { block, inline_block };

struct Length {
  enum class Unit { auto_, px, percent };
  Unit unit = Unit::auto_;
  double value = 0.0;

  bool is_auto() const { return unit == Unit::auto_; }
  bool operator==(const Length&) const = default;
};

struct StyleProps {
  std::optional<Rgb> background_color;
  Rgb color{0.0, 0.0, 0.0};
  Length width;
  Length height;  // px or auto
  double margin = 0.0;
  double padding = 0.0;
  Display display = Display::block;

  bool operator==(const StyleProps&) const = default;
};

/// Named CSS colors (the 16 basic ones), #rgb, #rrggbb and rgb(r,g,b).
std::optional<Rgb> parse_color(std::string_view text);

Display default_display(std::string_view tag);

/// Resolves the inline style attribute on top of tag defaults; `color` is
/// inherited from the parent.
StyleProps resolve_style(const DomNode& node, const Rgb& inherited_color);

struct TextLine {
  double x = 0, y = 0;
  std::string text;
};

struct LayoutBox {
  const DomNode* node = nullptr;  // element, or the #text leaf for text runs
  BBox bbox;
  StyleProps style;
  bool is_text = false;
  std::optional<std::string> text;
  std::vector<TextLine> lines;  // text runs only
  int depth = 0;
};

struct Layout {
  std::vector<LayoutBox> boxes;  // document order
  double content_height = 0.0;
};

/// Single-pass flow layout of the document body. Block elements stack and
/// fill the container width; inline-blocks and text flow left to right with
/// greedy wrapping. html/head/body produce no boxes. The returned boxes
/// point into `t`, which must outlive them.
Layout layout(const DomTree& t, double page_w);

/// White page, then boxes in document order: backgrounds as fills, text as
/// one solid 8x16 cell per non-space character.
Raster rasterize(const std::vector<LayoutBox>& boxes, int page_w, int page_h);

/// Text runs become text components, elements with a background become
/// visual components. Ids follow document order.
std::vector<Component> extract_annotations(const std::vector<LayoutBox>& boxes);

struct RenderedPage {
  Annotations annotations;
  Raster screenshot;
  double content_height = 0.0;
};

/// Layout + rasterize + annotate. page_h <= 0 uses the content height.
RenderedPage render_html(std::string_view html, int page_w, int page_h = 0);

enum class Complexity { small, medium };

std::optional<Complexity> parse_complexity(std::string_view s);

struct SynthPage {
  std::string html;
  Annotations annotations;
  Raster screenshot;
};

inline constexpr int kSynthPageWidth = 320;

/// Seeded header/content/footer page with colored blocks and text
/// snippets; annotations and screenshot come from its own layout.
SynthPage synth_page(std::uint64_t seed, Complexity complexity,
                     int page_w = kSynthPageWidth);

}  // namespace d2c
