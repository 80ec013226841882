#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace d2c {

struct Attribute {
  std::string name;
  std::string value;

  bool operator==(const Attribute&) const = default;
};

struct HtmlToken {
  enum class Kind { open, close, text };

  Kind kind = Kind::text;
  std::string name;  // lowercase tag name for open/close
  std::vector<Attribute> attrs;
  std::string text;  // entity-decoded text for Kind::text
  bool self_closing = false;
  std::size_t offset = 0;  // byte offset of the token in the source

  bool operator==(const HtmlToken&) const = default;
};

/// Splits HTML source into open/close/text tokens. Comments and doctype
/// are dropped, as is whitespace-only text. Tag and attribute names are
/// lowercased. Throws ParseError for an unterminated tag, comment or
/// quoted attribute value.
std::vector<HtmlToken> tokenize_html(std::string_view src);

inline constexpr std::string_view kTextTag = "#text";

struct DomNode {
  std::string tag;
  std::vector<Attribute> attributes;
  std::vector<DomNode> children;
  std::optional<std::string> text;  // set only on "#text" leaves

  bool is_text() const { return tag == kTextTag; }
  const std::string* attribute(std::string_view name) const;

  bool operator==(const DomNode&) const = default;
};

struct DomTree {
  DomNode root;
  std::vector<HtmlToken> source_tokens;
};

bool is_void_element(std::string_view tag);

/// Builds a tree rooted at <html>. Missing <html>/<body> wrappers are
/// synthesized. With recover=true unclosed elements are closed implicitly
/// and stray close tags are ignored; otherwise any mismatch throws a
/// ParseError of kind structure.
DomTree parse_html(std::string_view src, bool recover = true);

/// Normalized HTML: lowercase tags, double-quoted attributes, escaped text.
std::string serialize(const DomNode& node);
inline std::string serialize(const DomTree& tree) { return serialize(tree.root); }

using StringMultiset = std::multiset<std::string>;

/// "parent(child1,child2,...)" for every element with at least one element
/// child. Text leaves are ignored. unordered=true sorts the child list.
StringMultiset height1_subtrees(const DomNode& root, bool unordered = false);
inline StringMultiset height1_subtrees(const DomTree& t, bool unordered = false) {
  return height1_subtrees(t.root, unordered);
}

/// Slash-joined root-to-node tag paths, one per element.
StringMultiset dom_paths(const DomTree& t);

// Size of the multiset intersection.
std::size_t multiset_overlap(const StringMultiset& a, const StringMultiset& b);

/// Lexeme stream used by the BLEU-family metrics. Tag and attribute
/// lexemes are flagged as keywords.
struct Lexeme {
  std::string text;
  bool keyword = false;
};

std::vector<Lexeme> html_lexemes(const std::vector<HtmlToken>& tokens);

std::string decode_entities(std::string_view s);

}  // namespace d2c
