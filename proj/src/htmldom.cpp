#include "d2c/htmldom.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>

#include "d2c/error.hpp"

namespace d2c {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' ||
         c == '.';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_tag(std::string_view src, std::size_t pos) {
  if (pos + 1 >= src.size() || src[pos] != '<') return false;
  const char next = src[pos + 1];
  return std::isalpha(static_cast<unsigned char>(next)) || next == '/' || next == '!';
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    const std::size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += s[i++];
      continue;
    }
    const std::string_view ent = s.substr(i + 1, semi - i - 1);
    bool ok = true;
    if (ent == "amp") {
      out += '&';
    } else if (ent == "lt") {
      out += '<';
    } else if (ent == "gt") {
      out += '>';
    } else if (ent == "quot") {
      out += '"';
    } else if (ent == "apos") {
      out += '\'';
    } else if (ent.size() > 1 && ent[0] == '#') {
      const bool hex = ent[1] == 'x' || ent[1] == 'X';
      const std::string digits(ent.substr(hex ? 2 : 1));
      const bool well_formed =
          !digits.empty() &&
          std::all_of(digits.begin(), digits.end(), [hex](char c) {
            return hex ? std::isxdigit(static_cast<unsigned char>(c)) != 0
                       : std::isdigit(static_cast<unsigned char>(c)) != 0;
          });
      if (well_formed && digits.size() <= 7) {
        append_utf8(out, std::stoul(digits, nullptr, hex ? 16 : 10));
      } else {
        ok = false;
      }
    } else {
      ok = false;
    }
    if (ok) {
      i = semi + 1;
    } else {
      out += s[i++];
    }
  }
  return out;
}

std::vector<HtmlToken> tokenize_html(std::string_view src) {
  std::vector<HtmlToken> tokens;
  std::size_t pos = 0;
  const std::size_t n = src.size();

  auto push_text = [&](std::size_t begin, std::size_t end) {
    const std::string_view raw = src.substr(begin, end - begin);
    if (std::all_of(raw.begin(), raw.end(), is_space)) return;
    HtmlToken t;
    t.kind = HtmlToken::Kind::text;
    t.text = decode_entities(raw);
    t.offset = begin;
    tokens.push_back(std::move(t));
  };

  while (pos < n) {
    if (!starts_tag(src, pos)) {
      std::size_t end = pos + 1;
      while (end < n && !starts_tag(src, end)) ++end;
      push_text(pos, end);
      pos = end;
      continue;
    }

    const std::size_t start = pos;
    if (src.substr(pos, 4) == "<!--") {
      const std::size_t close = src.find("-->", pos + 4);
      if (close == std::string_view::npos) {
        throw ParseError(ErrorKind::parse, "unterminated comment", start);
      }
      pos = close + 3;
      continue;
    }
    if (src[pos + 1] == '!') {
      const std::size_t close = src.find('>', pos);
      if (close == std::string_view::npos) {
        throw ParseError(ErrorKind::parse, "unterminated declaration", start);
      }
      pos = close + 1;
      continue;
    }
    if (src[pos + 1] == '/') {
      std::size_t p = pos + 2;
      const std::size_t name_begin = p;
      while (p < n && is_name_char(src[p])) ++p;
      const std::string name = lower(src.substr(name_begin, p - name_begin));
      while (p < n && is_space(src[p])) ++p;
      if (p >= n || src[p] != '>' || name.empty()) {
        throw ParseError(ErrorKind::parse, "unterminated tag", start);
      }
      HtmlToken t;
      t.kind = HtmlToken::Kind::close;
      t.name = name;
      t.offset = start;
      tokens.push_back(std::move(t));
      pos = p + 1;
      continue;
    }

    // Open tag.
    std::size_t p = pos + 1;
    const std::size_t name_begin = p;
    while (p < n && is_name_char(src[p])) ++p;
    HtmlToken t;
    t.kind = HtmlToken::Kind::open;
    t.name = lower(src.substr(name_begin, p - name_begin));
    t.offset = start;
    bool closed = false;
    while (p < n) {
      while (p < n && is_space(src[p])) ++p;
      if (p >= n) break;
      if (src[p] == '>') {
        ++p;
        closed = true;
        break;
      }
      if (src[p] == '/' && p + 1 < n && src[p + 1] == '>') {
        t.self_closing = true;
        p += 2;
        closed = true;
        break;
      }
      if (src[p] == '/') {
        ++p;
        continue;
      }
      const std::size_t attr_begin = p;
      while (p < n && !is_space(src[p]) && src[p] != '=' && src[p] != '>' && src[p] != '/') ++p;
      Attribute attr{lower(src.substr(attr_begin, p - attr_begin)), {}};
      while (p < n && is_space(src[p])) ++p;
      if (p < n && src[p] == '=') {
        ++p;
        while (p < n && is_space(src[p])) ++p;
        if (p < n && (src[p] == '"' || src[p] == '\'')) {
          const char quote = src[p];
          const std::size_t close = src.find(quote, p + 1);
          if (close == std::string_view::npos) {
            throw ParseError(ErrorKind::parse, "unterminated quoted attribute", p);
          }
          attr.value = decode_entities(src.substr(p + 1, close - p - 1));
          p = close + 1;
        } else {
          const std::size_t value_begin = p;
          while (p < n && !is_space(src[p]) && src[p] != '>') ++p;
          attr.value = decode_entities(src.substr(value_begin, p - value_begin));
        }
      }
      if (!attr.name.empty()) t.attrs.push_back(std::move(attr));
    }
    if (!closed) throw ParseError(ErrorKind::parse, "unterminated tag", start);
    tokens.push_back(std::move(t));
    pos = p;
  }
  return tokens;
}

const std::string* DomNode::attribute(std::string_view name) const {
  for (const Attribute& a : attributes) {
    if (a.name == name) return &a.value;
  }
  return nullptr;
}

bool is_void_element(std::string_view tag) {
  static constexpr std::array<std::string_view, 4> kVoid = {"img", "br", "hr", "input"};
  return std::find(kVoid.begin(), kVoid.end(), tag) != kVoid.end();
}

namespace {

DomNode make_element(const HtmlToken& t) {
  DomNode node;
  node.tag = t.name;
  node.attributes = t.attrs;
  return node;
}

// Wraps the parsed forest so the root is always <html>, and content outside
// head/body lands in a <body>.
DomNode normalize_root(std::vector<DomNode> forest) {
  DomNode html;
  const auto element_count = std::count_if(forest.begin(), forest.end(),
                                           [](const DomNode& n) { return !n.is_text(); });
  if (forest.size() == 1 && element_count == 1 && forest.front().tag == "html") {
    html = std::move(forest.front());
  } else {
    html.tag = "html";
    html.children = std::move(forest);
  }

  const bool has_body = std::any_of(html.children.begin(), html.children.end(),
                                    [](const DomNode& n) { return n.tag == "body"; });
  const bool has_content = std::any_of(html.children.begin(), html.children.end(),
                                       [](const DomNode& n) { return n.tag != "head"; });
  if (!has_body && has_content) {
    DomNode body;
    body.tag = "body";
    std::vector<DomNode> kept;
    for (DomNode& child : html.children) {
      if (child.tag == "head") {
        kept.push_back(std::move(child));
      } else {
        body.children.push_back(std::move(child));
      }
    }
    kept.push_back(std::move(body));
    html.children = std::move(kept);
  }
  return html;
}

}  // namespace

DomTree parse_html(std::string_view src, bool recover) {
  DomTree tree;
  tree.source_tokens = tokenize_html(src);

  // stack[0] is a document pseudo-node collecting top-level nodes.
  std::vector<DomNode> stack(1);
  std::vector<std::size_t> open_offsets(1, 0);

  auto close_top = [&] {
    DomNode done = std::move(stack.back());
    stack.pop_back();
    open_offsets.pop_back();
    stack.back().children.push_back(std::move(done));
  };

  for (const HtmlToken& t : tree.source_tokens) {
    switch (t.kind) {
      case HtmlToken::Kind::text: {
        DomNode leaf;
        leaf.tag = std::string(kTextTag);
        leaf.text = t.text;
        stack.back().children.push_back(std::move(leaf));
        break;
      }
      case HtmlToken::Kind::open:
        if (is_void_element(t.name) || t.self_closing) {
          stack.back().children.push_back(make_element(t));
        } else {
          stack.push_back(make_element(t));
          open_offsets.push_back(t.offset);
        }
        break;
      case HtmlToken::Kind::close: {
        if (is_void_element(t.name)) break;
        std::size_t match = 0;
        for (std::size_t k = stack.size(); k-- > 1;) {
          if (stack[k].tag == t.name) {
            match = k;
            break;
          }
        }
        if (match == 0) {
          if (!recover) {
            throw ParseError(ErrorKind::structure, "stray closing tag </" + t.name + ">",
                             t.offset);
          }
          break;
        }
        if (match != stack.size() - 1 && !recover) {
          throw ParseError(ErrorKind::structure,
                           "closing tag </" + t.name + "> does not match open <" +
                               stack.back().tag + ">",
                           t.offset);
        }
        while (stack.size() - 1 > match) close_top();
        close_top();
        break;
      }
    }
  }
  if (stack.size() > 1 && !recover) {
    throw ParseError(ErrorKind::structure, "unclosed tag <" + stack.back().tag + ">",
                     open_offsets.back());
  }
  while (stack.size() > 1) close_top();

  tree.root = normalize_root(std::move(stack.front().children));
  return tree;
}

namespace {

std::string escape(std::string_view s, bool attribute) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
        } else {
          out += c;
        }
        break;
      default: out += c;
    }
  }
  return out;
}

void serialize_into(const DomNode& node, std::string& out) {
  if (node.is_text()) {
    out += escape(node.text.value_or(""), false);
    return;
  }
  out += '<';
  out += node.tag;
  for (const Attribute& a : node.attributes) {
    out += ' ';
    out += a.name;
    out += "=\"";
    out += escape(a.value, true);
    out += '"';
  }
  out += '>';
  if (is_void_element(node.tag)) return;
  for (const DomNode& child : node.children) serialize_into(child, out);
  out += "</";
  out += node.tag;
  out += '>';
}

}  // namespace

std::string serialize(const DomNode& node) {
  std::string out;
  serialize_into(node, out);
  return out;
}

StringMultiset height1_subtrees(const DomNode& root, bool unordered) {
  StringMultiset out;
  std::function<void(const DomNode&)> visit = [&](const DomNode& node) {
    std::vector<std::string> child_tags;
    for (const DomNode& child : node.children) {
      if (!child.is_text()) child_tags.push_back(child.tag);
    }
    if (!child_tags.empty()) {
      if (unordered) std::sort(child_tags.begin(), child_tags.end());
      std::string entry = node.tag + "(";
      for (std::size_t i = 0; i < child_tags.size(); ++i) {
        if (i) entry += ',';
        entry += child_tags[i];
      }
      entry += ')';
      out.insert(std::move(entry));
    }
    for (const DomNode& child : node.children) {
      if (!child.is_text()) visit(child);
    }
  };
  if (!root.is_text()) visit(root);
  return out;
}

StringMultiset dom_paths(const DomTree& t) {
  StringMultiset out;
  std::function<void(const DomNode&, const std::string&)> visit = [&](const DomNode& node,
                                                                      const std::string& prefix) {
    const std::string path = prefix.empty() ? node.tag : prefix + "/" + node.tag;
    out.insert(path);
    for (const DomNode& child : node.children) {
      if (!child.is_text()) visit(child, path);
    }
  };
  if (!t.root.is_text()) visit(t.root, "");
  return out;
}

std::size_t multiset_overlap(const StringMultiset& a, const StringMultiset& b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

std::vector<Lexeme> html_lexemes(const std::vector<HtmlToken>& tokens) {
  std::vector<Lexeme> out;
  for (const HtmlToken& t : tokens) {
    switch (t.kind) {
      case HtmlToken::Kind::open:
        out.push_back({"<" + t.name, true});
        for (const Attribute& a : t.attrs) out.push_back({a.name + "=\"" + a.value + "\"", true});
        out.push_back({t.self_closing ? "/>" : ">", false});
        break;
      case HtmlToken::Kind::close:
        out.push_back({"</" + t.name + ">", true});
        break;
      case HtmlToken::Kind::text: {
        std::size_t i = 0;
        while (i < t.text.size()) {
          while (i < t.text.size() && is_space(t.text[i])) ++i;
          std::size_t j = i;
          while (j < t.text.size() && !is_space(t.text[j])) ++j;
          if (j > i) out.push_back({t.text.substr(i, j - i), false});
          i = j;
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace d2c
