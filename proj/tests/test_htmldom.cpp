#include "d2c/htmldom.hpp"
#include "d2c/error.hpp"
#include "d2c/renderlab.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace d2c;
using Kind = HtmlToken::Kind;

namespace {

const DomNode& body_of(const DomTree& t) {
  for (const DomNode& c : t.root.children)
    if (c.tag == "body") return c;
  throw std::runtime_error("no body");
}

std::vector<const DomNode*> elements(const DomNode& n) {
  std::vector<const DomNode*> out;
  for (const DomNode& c : n.children)
    if (!c.is_text()) out.push_back(&c);
  return out;
}

StringMultiset ms(std::initializer_list<std::string> xs) { return StringMultiset(xs); }

}  // namespace

TEST_CASE("tokenize example") {
  const auto toks = tokenize_html("<div><p>hi</p></div>");
  REQUIRE(toks.size() == 5);
  const Kind kinds[] = {Kind::open, Kind::open, Kind::text, Kind::close, Kind::close};
  const char* names[] = {"div", "p", "", "p", "div"};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(toks[i].kind == kinds[i]);
    CHECK(toks[i].name == names[i]);
  }
  CHECK(toks[2].text == "hi");
  CHECK(toks[1].offset == 5);
  CHECK(tokenize_html("").empty());
}

TEST_CASE("tokenize errors carry offsets") {
  try {
    tokenize_html("<div");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(e.offset() == 0);
  }
  try {
    tokenize_html("<p>x</p><a href='oops>");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(e.offset() >= 8);
  }
  CHECK(oracle::throws_kind(ErrorKind::parse, [] { tokenize_html("<!-- never closed"); }));
}

TEST_CASE("tokenize normalization") {
  const auto toks = tokenize_html(
      "<!DOCTYPE html>\n<!-- c --><DIV Class=\"a b\" id='x' hidden>  \n<SPAN>a &amp; b&#33;</span></div>");
  REQUIRE(toks.size() == 5);
  CHECK(toks[0].name == "div");
  REQUIRE(toks[0].attrs.size() == 3);
  CHECK(toks[0].attrs[0] == Attribute{"class", "a b"});
  CHECK(toks[0].attrs[1] == Attribute{"id", "x"});
  CHECK(toks[0].attrs[2].name == "hidden");
  CHECK(toks[1].name == "span");
  CHECK(toks[2].text == "a & b!");
  CHECK(toks[3].name == "span");
}

TEST_CASE("parse builds nested tree") {
  const DomTree t = parse_html("<div><p>hi</p></div>", false);
  CHECK(t.root.tag == "html");
  const auto top = elements(body_of(t));
  REQUIRE(top.size() == 1);
  CHECK(top[0]->tag == "div");
  REQUIRE(top[0]->children.size() == 1);
  const DomNode& p = top[0]->children[0];
  CHECK(p.tag == "p");
  REQUIRE(p.children.size() == 1);
  CHECK(p.children[0].is_text());
  CHECK(p.children[0].text == "hi");
}

TEST_CASE("recovery and strict mode") {
  const DomTree t = parse_html("<div><p>hi</div>", true);
  const auto top = elements(body_of(t));
  REQUIRE(top.size() == 1);
  REQUIRE(top[0]->children.size() == 1);
  CHECK(top[0]->children[0].tag == "p");
  CHECK(top[0]->children[0].children[0].text == "hi");

  try {
    parse_html("<div><p>hi</div>", false);
    FAIL("expected a structure error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::structure);
    CHECK(std::string(e.what()).find("</div>") != std::string::npos);
    CHECK(e.offset() == 10);
  }
  CHECK(oracle::throws_kind(ErrorKind::structure, [] { parse_html("<p>x</p></span>", false); }));
  CHECK(oracle::throws_kind(ErrorKind::structure, [] { parse_html("<p>x", false); }));
  // stray closers are dropped in recovery mode
  CHECK(elements(body_of(parse_html("<p>x</p></span>", true))).size() == 1);
}

TEST_CASE("void elements take no children") {
  const DomTree t = parse_html("<div><img src='a.png'><br><input>text</div>", false);
  const auto top = elements(body_of(t));
  REQUIRE(top.size() == 1);
  const auto kids = elements(*top[0]);
  REQUIRE(kids.size() == 3);
  for (const DomNode* k : kids) CHECK(k->children.empty());
  CHECK(*kids[0]->attribute("src") == "a.png");
}

TEST_CASE("height1 subtrees") {
  const DomTree t = parse_html("<body><div><span>x</span></div><p>y</p></body>");
  CHECK(height1_subtrees(t) == ms({"html(body)", "body(div,p)", "div(span)"}));

  // a lone element under the synthesized wrappers contributes no entry of its own
  const DomTree single = parse_html("<p>only text</p>");
  const auto s = height1_subtrees(single);
  CHECK(s.count("p()") == 0);
  for (const auto& e : s) CHECK(e.rfind("p(", 0) != 0);

  const DomTree copy = t;
  CHECK(height1_subtrees(copy) == height1_subtrees(t));

  const DomTree swapped = parse_html("<body><p>y</p><div><span>x</span></div></body>");
  CHECK(height1_subtrees(swapped).count("body(p,div)") == 1);
  CHECK(height1_subtrees(swapped, true) == height1_subtrees(t, true));
}

TEST_CASE("height1 subtrees compose over children") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DomTree t = parse_html(synth_page(seed, Complexity::medium).html);
    StringMultiset combined;
    for (const DomNode& c : t.root.children) {
      const auto part = height1_subtrees(c);
      combined.insert(part.begin(), part.end());
    }
    std::string own = t.root.tag + "(";
    bool first = true;
    for (const DomNode& c : t.root.children) {
      if (c.is_text()) continue;
      own += (first ? "" : ",") + c.tag;
      first = false;
    }
    if (!first) combined.insert(own + ")");
    CHECK(combined == height1_subtrees(t));
  }
}

TEST_CASE("dom paths") {
  CHECK(dom_paths(parse_html("<html><body><div/></body></html>")) ==
        ms({"html", "html/body", "html/body/div"}));
  CHECK(dom_paths(parse_html("<html><body></body></html>")) == ms({"html", "html/body"}));
  const auto twice = dom_paths(parse_html("<div></div><div></div>"));
  CHECK(twice.count("html/body/div") == 2);
}

TEST_CASE("multiset overlap") {
  CHECK(multiset_overlap(ms({"a", "a", "b"}), ms({"a", "b", "b", "c"})) == 2);
  CHECK(multiset_overlap(ms({}), ms({"a"})) == 0);
}

TEST_CASE("serialize round trip") {
  const char* sources[] = {
      "<div><p>hi</p></div>",
      "<DIV class='x'>a &lt; b<br>c</DIV>",
      "<ul><li>one<li>two</ul>",
      "<p><span>unclosed",
      "<table><tr><td>z</td></tr></table>",
  };
  for (const char* src : sources) {
    const DomTree once = parse_html(src, true);
    const std::string text = serialize(once);
    const DomTree twice = parse_html(text, true);
    CHECK(twice.root == once.root);
    CHECK(serialize(twice) == text);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DomTree once = parse_html(synth_page(seed, Complexity::small).html, false);
    CHECK(parse_html(serialize(once), false).root == once.root);
  }
}

TEST_CASE("serializer output is normalized") {
  const std::string s = serialize(parse_html("<P ID='a'>x &amp; y</P>"));
  CHECK(s.find("<p id=\"a\">x &amp; y</p>") != std::string::npos);
}

TEST_CASE("lexemes flag keywords") {
  const auto lex = html_lexemes(tokenize_html("<p class=\"a\">hello world</p>"));
  bool saw_keyword = false, saw_text = false;
  for (const Lexeme& l : lex) {
    if (l.keyword) saw_keyword = true;
    if (!l.keyword && l.text == "hello") saw_text = true;
  }
  CHECK(saw_keyword);
  CHECK(saw_text);
}

TEST_CASE("entity decoding") {
  CHECK(decode_entities("&amp;&lt;&gt;&quot;&#65;&#x42;") == "&<>\"AB");
  CHECK(decode_entities("&unknown;") == "&unknown;");
}
