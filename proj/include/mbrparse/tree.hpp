#pragma once

// Bracketed parse trees: reading, writing, treebank preprocessing, and
// conversion to sets of (start, end, label) constituents.

#include <cctype>
#include <compare>
#include <cstddef>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mbrparse/common.hpp"

namespace mbrparse {

// A leaf has no children and carries a word in `label`. Every other node has
// at least one child. Leaf positions are implicit: 1..n left to right.
struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;

  static ParseTree leaf(std::string word) { return ParseTree{std::move(word), {}}; }
  static ParseTree node(std::string label, std::vector<ParseTree> children) {
    return ParseTree{std::move(label), std::move(children)};
  }
  static ParseTree preterminal(std::string label, std::string word) {
    std::vector<ParseTree> kids;
    kids.push_back(leaf(std::move(word)));
    return node(std::move(label), std::move(kids));
  }

  bool is_leaf() const { return children.empty(); }
  bool is_preterminal() const { return children.size() == 1 && children.front().is_leaf(); }

  bool operator==(const ParseTree&) const = default;
};

inline void collect_yield(const ParseTree& tree, std::vector<std::string>& words) {
  if (tree.is_leaf()) {
    words.push_back(tree.label);
    return;
  }
  for (const auto& child : tree.children) collect_yield(child, words);
}

inline std::vector<std::string> yield(const ParseTree& tree) {
  std::vector<std::string> words;
  collect_yield(tree, words);
  return words;
}

// Number of non-leaf nodes.
inline std::size_t nonterminal_count(const ParseTree& tree) {
  if (tree.is_leaf()) return 0;
  std::size_t count = 1;
  for (const auto& child : tree.children) count += nonterminal_count(child);
  return count;
}

// Words plus nonterminal nodes; the unit of the corpus length cap.
inline std::size_t symbol_count(const ParseTree& tree) {
  return yield(tree).size() + nonterminal_count(tree);
}

// Binarized shape: every internal node has two non-leaf children, or is a
// preterminal over exactly one word.
inline bool is_binarized(const ParseTree& tree) {
  if (tree.is_leaf()) return false;
  if (tree.is_preterminal()) return true;
  if (tree.children.size() != 2) return false;
  return is_binarized(tree.children[0]) && is_binarized(tree.children[1]);
}

// ---------------------------------------------------------------------------
// Reading and writing

namespace detail {

struct Token {
  enum Kind { open, close, atom } kind;
  std::string text;
  int line;
};

class Tokenizer {
 public:
  explicit Tokenizer(std::istream& in) : in_(in) {}

  bool next(Token& token) {
    char c;
    while (in_.get(c)) {
      if (c == '\n') {
        ++line_;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (c == '(') {
        token = {Token::open, "(", line_};
        return true;
      }
      if (c == ')') {
        token = {Token::close, ")", line_};
        return true;
      }
      std::string text(1, c);
      while (in_.get(c)) {
        if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) {
          in_.unget();
          break;
        }
        text.push_back(c);
      }
      token = {Token::atom, std::move(text), line_};
      return true;
    }
    return false;
  }

  int line() const { return line_; }

 private:
  std::istream& in_;
  int line_ = 1;
};

// Parses the remainder of a node whose '(' was already consumed.
inline ParseTree read_node(Tokenizer& tokens, int open_line) {
  Token token;
  if (!tokens.next(token)) throw Error("unbalanced at line " + std::to_string(open_line));
  if (token.kind == Token::close) throw Error("empty node at line " + std::to_string(token.line));

  ParseTree tree;
  bool have_label = false;
  if (token.kind == Token::atom) {
    tree.label = token.text;
    have_label = true;
  } else {
    tree.children.push_back(read_node(tokens, token.line));
  }

  for (;;) {
    if (!tokens.next(token)) throw Error("unbalanced at line " + std::to_string(open_line));
    if (token.kind == Token::close) break;
    if (token.kind == Token::open) {
      tree.children.push_back(read_node(tokens, token.line));
    } else {
      tree.children.push_back(ParseTree::leaf(token.text));
    }
  }

  if (tree.children.empty()) {
    throw Error("node '" + tree.label + "' has no children at line " + std::to_string(open_line));
  }
  if (!have_label) {
    // Treebank wrapper "( (S ...) )".
    if (tree.children.size() == 1) return std::move(tree.children.front());
    throw Error("node without label at line " + std::to_string(open_line));
  }
  return tree;
}

inline void write_node(const ParseTree& tree, std::string& out) {
  if (tree.is_leaf()) {
    out += tree.label;
    return;
  }
  out += '(';
  out += tree.label;
  for (const auto& child : tree.children) {
    out += ' ';
    write_node(child, out);
  }
  out += ')';
}

}  // namespace detail

// Reads every bracketed tree in the stream. Whitespace is insignificant.
inline std::vector<ParseTree> read_bracketed(std::istream& in) {
  std::vector<ParseTree> trees;
  detail::Tokenizer tokens(in);
  detail::Token token;
  while (tokens.next(token)) {
    if (token.kind == detail::Token::close) {
      throw Error("unbalanced at line " + std::to_string(token.line));
    }
    if (token.kind == detail::Token::atom) {
      throw Error("unexpected token '" + token.text + "' outside a tree at line " +
                  std::to_string(token.line));
    }
    trees.push_back(detail::read_node(tokens, token.line));
  }
  return trees;
}

inline std::vector<ParseTree> read_bracketed(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_bracketed(in);
}

inline ParseTree read_tree(std::string_view text) {
  auto trees = read_bracketed(text);
  if (trees.size() != 1) {
    throw Error("expected exactly one tree, found " + std::to_string(trees.size()));
  }
  return std::move(trees.front());
}

inline std::string write_bracketed(const ParseTree& tree) {
  std::string out;
  detail::write_node(tree, out);
  return out;
}

// ---------------------------------------------------------------------------
// Treebank preprocessing

inline constexpr std::string_view kEmptyElementLabel = "-NONE-";
inline constexpr std::string_view kContinuationSuffix = "_Cont";

namespace detail {

// Drops empty elements and any subtree left without words. Returns false when
// nothing of `tree` survives.
inline bool remove_empty(const ParseTree& tree, ParseTree& out) {
  if (tree.is_leaf()) {
    out = tree;
    return true;
  }
  if (tree.label == kEmptyElementLabel) return false;
  out.label = tree.label;
  out.children.clear();
  for (const auto& child : tree.children) {
    ParseTree kept;
    if (remove_empty(child, kept)) out.children.push_back(std::move(kept));
  }
  return !out.children.empty();
}

inline ParseTree binarize_clean(const ParseTree& tree);

// Right-branching continuation over children [first, last), at least two.
inline ParseTree continuation(const std::string& label, const std::vector<ParseTree>& children,
                              std::size_t first) {
  std::vector<ParseTree> kids;
  kids.push_back(binarize_clean(children[first]));
  if (children.size() - first == 2) {
    kids.push_back(binarize_clean(children[first + 1]));
  } else {
    kids.push_back(continuation(label, children, first + 1));
  }
  return ParseTree::node(label, std::move(kids));
}

inline ParseTree binarize_clean(const ParseTree& tree) {
  const ParseTree* cur = &tree;
  // Unary chains collapse onto the bottom label.
  while (cur->children.size() == 1 && !cur->children.front().is_leaf()) {
    cur = &cur->children.front();
  }
  if (cur->is_preterminal()) return *cur;

  for (const auto& child : cur->children) {
    if (child.is_leaf()) {
      throw Error("node '" + cur->label + "' mixes the bare word '" + child.label +
                  "' with other children");
    }
  }
  if (cur->children.size() == 2) {
    std::vector<ParseTree> kids;
    kids.push_back(binarize_clean(cur->children[0]));
    kids.push_back(binarize_clean(cur->children[1]));
    return ParseTree::node(cur->label, std::move(kids));
  }

  const std::string cont = cur->label + std::string(kContinuationSuffix);
  std::vector<ParseTree> kids;
  kids.push_back(binarize_clean(cur->children[0]));
  kids.push_back(continuation(cont, cur->children, 1));
  return ParseTree::node(cur->label, std::move(kids));
}

}  // namespace detail

// Empty-element removal, unary collapse (bottom label kept), then right
// binarization: (X A B C D) -> (X A (X_Cont B (X_Cont C D))).
inline ParseTree binarize(const ParseTree& tree) {
  if (tree.is_leaf()) throw Error("cannot binarize a bare word '" + tree.label + "'");
  ParseTree cleaned;
  if (!detail::remove_empty(tree, cleaned)) {
    throw Error("tree '" + tree.label + "' has an empty yield after removing empty elements");
  }
  return detail::binarize_clean(cleaned);
}

// ---------------------------------------------------------------------------
// Constituents

struct Span {
  int start;  // 1-based
  int end;    // inclusive
  int length() const { return end - start + 1; }
  auto operator<=>(const Span&) const = default;
};

struct Constituent {
  int start;
  int end;
  std::string label;

  Span span() const { return {start, end}; }
  int length() const { return end - start + 1; }
  auto operator<=>(const Constituent&) const = default;
};

struct ConstituentSet {
  int sentence_length = 0;
  std::set<Constituent> triples;

  std::size_t size() const { return triples.size(); }
  bool contains(const Constituent& c) const { return triples.count(c) != 0; }

  // Keeps only constituents spanning at least `min_length` words.
  ConstituentSet filtered(int min_length) const {
    ConstituentSet out{sentence_length, {}};
    for (const auto& c : triples) {
      if (c.length() >= min_length) out.triples.insert(c);
    }
    return out;
  }

  bool operator==(const ConstituentSet&) const = default;
};

namespace detail {

inline int collect_constituents(const ParseTree& tree, int start, ConstituentSet& out) {
  if (tree.is_leaf()) return start + 1;
  int next = start;
  for (const auto& child : tree.children) next = collect_constituents(child, next, out);
  out.triples.insert({start, next - 1, tree.label});
  return next;
}

}  // namespace detail

// One triple per non-leaf node, preterminals included.
inline ConstituentSet to_constituents(const ParseTree& tree) {
  ConstituentSet out;
  out.sentence_length = detail::collect_constituents(tree, 1, out) - 1;
  return out;
}

}  // namespace mbrparse
