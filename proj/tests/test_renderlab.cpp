#include "d2c/renderlab.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace d2c;

namespace {

const Rgb kRed{1, 0, 0};
const Rgb kWhite{1, 1, 1};

std::vector<BBox> element_boxes(const Layout& l) {
  std::vector<BBox> out;
  for (const LayoutBox& b : l.boxes)
    if (!b.is_text) out.push_back(b.bbox);
  return out;
}

}  // namespace

TEST_CASE("color parsing") {
  CHECK(parse_color("red") == kRed);
  CHECK(parse_color("#00f") == Rgb{0, 0, 1});
  CHECK(parse_color("#808080") == Rgb{128 / 255.0, 128 / 255.0, 128 / 255.0});
  CHECK(parse_color("rgb(0, 255, 0)") == Rgb{0, 1, 0});
  CHECK(parse_color("Olive") == Rgb{128 / 255.0, 128 / 255.0, 0});
  CHECK_FALSE(parse_color("not-a-color"));
}

TEST_CASE("style resolution") {
  const DomTree t = parse_html(
      "<div style='background:navy; width:50%; height:12px; margin:3px; padding:2px; color:red'></div>"
      "<span></span>");
  const DomNode& body = t.root.children.back();
  const StyleProps s = resolve_style(body.children[0], {0, 0, 0});
  CHECK(s.background_color == parse_color("navy"));
  CHECK(s.width == Length{Length::Unit::percent, 50});
  CHECK(s.height == Length{Length::Unit::px, 12});
  CHECK(s.margin == 3);
  CHECK(s.padding == 2);
  CHECK(s.color == kRed);
  CHECK(s.display == Display::block);
  const StyleProps inherited = resolve_style(body.children[1], kRed);
  CHECK(inherited.color == kRed);
  CHECK(inherited.display == Display::inline_block);
}

TEST_CASE("layout examples") {
  const Layout one = layout(parse_html("<div style='height:20px'></div>"), 100);
  CHECK(element_boxes(one) == std::vector<BBox>{{0, 0, 100, 20}});

  const Layout two =
      layout(parse_html("<div style='height:20px'></div><div style='height:20px'></div>"), 100);
  CHECK(element_boxes(two) == std::vector<BBox>{{0, 0, 100, 20}, {0, 20, 100, 20}});
  CHECK(two.content_height == 40);

  CHECK(layout(parse_html("<html><body></body></html>"), 100).boxes.empty());
  CHECK(oracle::throws_kind(ErrorKind::invalid_input, [] { layout(parse_html(""), 0); }));
}

TEST_CASE("text measurement and wrapping") {
  const DomTree t = parse_html("<p>abc</p>");
  const Layout l = layout(t, 200);
  const LayoutBox* text = nullptr;
  for (const auto& b : l.boxes)
    if (b.is_text) text = &b;
  REQUIRE(text);
  CHECK(text->bbox == BBox{0, 0, 24, 16});

  // "aaaa bbbb cccc" at 8px per glyph in an 80px column: 9 chars fit per line
  const Layout wrapped = layout(parse_html("<p>aaaa bbbb cccc</p>"), 80);
  for (const auto& b : wrapped.boxes) {
    if (!b.is_text) continue;
    REQUIRE(b.lines.size() == 2);
    CHECK(b.lines[0].text == "aaaa bbbb");
    CHECK(b.lines[1].text == "cccc");
    CHECK(b.lines[1].y == 16);
    CHECK(b.bbox.h == 32);
  }
}

TEST_CASE("padding and inline blocks") {
  const Layout l = layout(
      parse_html("<div style='padding:5px'><span style='width:30px;height:10px'></span>"
                 "<span style='width:30px;height:10px'></span>"
                 "<span style='width:30px;height:10px'></span></div>"),
      80);
  const auto boxes = element_boxes(l);
  REQUIRE(boxes.size() == 4);
  CHECK(boxes[0] == BBox{0, 0, 80, 30});
  CHECK(boxes[1] == BBox{5, 5, 30, 10});
  CHECK(boxes[2] == BBox{35, 5, 30, 10});
  CHECK(boxes[3] == BBox{5, 15, 30, 10});  // wrapped to the next row
}

TEST_CASE("children stay inside the parent content box") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const DomTree t = parse_html(synth_page(seed, Complexity::medium).html);
    const Layout l = layout(t, kSynthPageWidth);
    for (std::size_t i = 0; i < l.boxes.size(); ++i) {
      // nearest preceding box one level up is the parent
      for (std::size_t k = i; k-- > 0;) {
        if (l.boxes[k].depth != l.boxes[i].depth - 1) continue;
        const BBox& p = l.boxes[k].bbox;
        const BBox& c = l.boxes[i].bbox;
        const double pad = l.boxes[k].style.padding;
        CHECK(c.x >= p.x + pad - 1e-9);
        CHECK(c.y >= p.y + pad - 1e-9);
        CHECK(c.x + c.w <= p.x + p.w - pad + 1e-9);
        CHECK(c.y + c.h <= p.y + p.h - pad + 1e-9);
        break;
      }
    }
  }
}

TEST_CASE("rasterize red div") {
  const DomTree t = parse_html("<div style='background:red;height:20px'></div>");
  const Raster img = rasterize(layout(t, 100).boxes, 100, 50);
  CHECK(img.width() == 100);
  CHECK(img.height() == 50);
  for (int y = 0; y < 50; ++y)
    for (int x = 0; x < 100; ++x) CHECK(img.at(x, y) == (y < 20 ? kRed : kWhite));

  CHECK(rasterize({}, 7, 3) == Raster(7, 3));
}

TEST_CASE("painter's order and glyph cells") {
  const DomTree t = parse_html(
      "<div style='background:red;height:20px'><div style='background:blue;height:10px'></div></div>"
      "<p style='color:lime'>a b</p>");
  const Raster img = rasterize(layout(t, 40).boxes, 40, 40);
  CHECK(img.at(0, 0) == Rgb{0, 0, 1});
  CHECK(img.at(0, 15) == kRed);
  // "a b": glyphs at x 0..7 and 16..23 on rows 20..35, the space is left blank
  CHECK(img.at(3, 25) == Rgb{0, 1, 0});
  CHECK(img.at(10, 25) == kWhite);
  CHECK(img.at(20, 25) == Rgb{0, 1, 0});
  CHECK(img.at(30, 25) == kWhite);
}

TEST_CASE("annotation extraction") {
  const DomTree t = parse_html("<div style='background:teal;padding:2px'><p>hey</p></div>");
  const Layout l = layout(t, 100);
  const auto comps = extract_annotations(l.boxes);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].kind == ComponentKind::visual);
  CHECK(comps[0].color == parse_color("teal"));
  CHECK(comps[1].kind == ComponentKind::text);
  CHECK(comps[1].text == "hey");
  CHECK(comps[1].bbox == BBox{2, 2, 24, 16});
  CHECK(comps[0].id == 0);
  CHECK(comps[1].id == 1);
  CHECK(extract_annotations(l.boxes) == comps);

  const DomTree plain = parse_html("<div></div>");
  CHECK(extract_annotations(layout(plain, 100).boxes).empty());
}

TEST_CASE("synth pages") {
  const SynthPage a = synth_page(1, Complexity::small);
  const SynthPage b = synth_page(1, Complexity::small);
  CHECK(a.html == b.html);
  CHECK(a.annotations.components == b.annotations.components);
  CHECK(a.screenshot == b.screenshot);
  CHECK(synth_page(2, Complexity::small).html != a.html);

  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    for (Complexity cx : {Complexity::small, Complexity::medium}) {
      const SynthPage p = synth_page(seed, cx);
      CHECK_NOTHROW(parse_html(p.html, false));
      CHECK(p.screenshot.width() == p.annotations.page.width);
      CHECK(p.screenshot.height() == p.annotations.page.height);
      int visual = 0, text = 0;
      for (const Component& c : p.annotations.components) {
        (c.is_text() ? text : visual)++;
        CHECK(c.bbox.x >= 0);
        CHECK(c.bbox.y >= 0);
        CHECK(c.bbox.x + c.bbox.w <= p.annotations.page.width);
        CHECK(c.bbox.y + c.bbox.h <= p.annotations.page.height);
      }
      CHECK(visual >= 3);
      CHECK(visual <= 12);
      CHECK(text >= 2);
      CHECK(text <= 10);
    }
  }
}

TEST_CASE("appending a block never shrinks the page") {
  Rng rng(9);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::string html = synth_page(seed, Complexity::medium).html;
    const double before = layout(parse_html(html), 320).content_height;
    const auto at = html.rfind("</body>");
    html.insert(at, "<div style='height:" + std::to_string(rng.range(0, 30)) + "px'></div>");
    CHECK(layout(parse_html(html), 320).content_height >= before);
  }
}

TEST_CASE("render_html uses content height") {
  const RenderedPage p = render_html("<div style='background:red;height:30px'></div>", 50);
  CHECK(p.screenshot.height() == 30);
  CHECK(p.annotations.page.height == 30);
  CHECK(render_html("", 50).screenshot.height() == 1);
  CHECK(render_html("<p>x</p>", 50, 99).screenshot.height() == 99);
}
