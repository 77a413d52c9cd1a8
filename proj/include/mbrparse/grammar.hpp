#pragma once

// CNF probabilistic context-free grammars: X -> Y Z and X -> w.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mbrparse/common.hpp"
#include "mbrparse/tree.hpp"

namespace mbrparse {

// Interned names; ids are dense and assigned in order of first interning.
template <typename Id>
class Vocabulary {
 public:
  Id intern(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    Id id = static_cast<Id>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
  }

  std::optional<Id> find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(Id id) const { return names_.at(index(id)); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Id> ids_;
};

struct BinaryRule {
  Nonterminal lhs;
  Nonterminal left;
  Nonterminal right;
  double prob;
};

struct LexicalRule {
  Nonterminal lhs;
  Terminal word;
  double prob;
};

// Immutable after construction; safe for concurrent reads.
class Grammar {
 public:
  Nonterminal start() const { return start_; }
  const std::string& start_name() const { return nonterminals_.name(start_); }

  const Vocabulary<Nonterminal>& nonterminals() const { return nonterminals_; }
  const Vocabulary<Terminal>& terminals() const { return terminals_; }
  std::size_t nonterminal_count() const { return nonterminals_.size(); }
  std::size_t rule_count() const { return binary_.size() + lexical_.size(); }

  const std::string& name(Nonterminal x) const { return nonterminals_.name(x); }
  const std::string& name(Terminal w) const { return terminals_.name(w); }
  std::optional<Nonterminal> find_nonterminal(std::string_view n) const { return nonterminals_.find(n); }
  std::optional<Terminal> find_terminal(std::string_view n) const { return terminals_.find(n); }

  // Sorted by (lhs, left, right).
  std::span<const BinaryRule> binary_rules() const { return binary_; }
  // Sorted by (lhs, word).
  std::span<const LexicalRule> lexical_rules() const { return lexical_; }

  // Binary rules of one lhs, sorted by (left, right).
  std::span<const BinaryRule> binary_rules(Nonterminal lhs) const {
    auto [b, e] = binary_by_lhs_.at(index(lhs));
    return std::span<const BinaryRule>(binary_).subspan(b, e - b);
  }

  // Lexical rules rewriting to `word`, sorted by lhs.
  std::span<const LexicalRule> lexical_rules_for(Terminal word) const {
    return lexical_by_word_.at(index(word));
  }

 private:
  friend class GrammarBuilder;

  Nonterminal start_{};
  Vocabulary<Nonterminal> nonterminals_;
  Vocabulary<Terminal> terminals_;
  std::vector<BinaryRule> binary_;
  std::vector<LexicalRule> lexical_;
  std::vector<std::pair<std::size_t, std::size_t>> binary_by_lhs_;
  std::vector<std::vector<LexicalRule>> lexical_by_word_;
};

// Collects rules by name. Duplicate (lhs, rhs) pairs are merged by summing;
// rules with probability <= 0 are dropped.
class GrammarBuilder {
 public:
  GrammarBuilder& set_start(std::string_view name) {
    start_ = std::string(name);
    return *this;
  }

  GrammarBuilder& add_binary(std::string_view lhs, std::string_view left, std::string_view right,
                             double prob) {
    binary_.push_back({std::string(lhs), std::string(left), std::string(right), prob});
    return *this;
  }

  GrammarBuilder& add_lexical(std::string_view lhs, std::string_view word, double prob) {
    lexical_.push_back({std::string(lhs), std::string(word), prob});
    return *this;
  }

  Grammar build() const {
    if (start_.empty()) throw Error("grammar has no start symbol");
    Grammar g;
    g.start_ = g.nonterminals_.intern(start_);

    std::map<std::tuple<Nonterminal, Nonterminal, Nonterminal>, double> binary;
    for (const auto& r : binary_) {
      check_prob(r.prob, r.lhs);
      auto lhs = g.nonterminals_.intern(r.lhs);
      auto left = g.nonterminals_.intern(r.left);
      auto right = g.nonterminals_.intern(r.right);
      binary[{lhs, left, right}] += r.prob;
    }
    std::map<std::pair<Nonterminal, Terminal>, double> lexical;
    for (const auto& r : lexical_) {
      check_prob(r.prob, r.lhs);
      auto lhs = g.nonterminals_.intern(r.lhs);
      auto word = g.terminals_.intern(r.word);
      lexical[{lhs, word}] += r.prob;
    }

    for (const auto& [key, prob] : binary) {
      if (prob <= 0.0) continue;
      auto [lhs, left, right] = key;
      g.binary_.push_back({lhs, left, right, prob});
    }
    for (const auto& [key, prob] : lexical) {
      if (prob <= 0.0) continue;
      g.lexical_.push_back({key.first, key.second, prob});
    }

    g.binary_by_lhs_.assign(g.nonterminals_.size(), {0, 0});
    for (std::size_t i = 0; i < g.binary_.size();) {
      std::size_t j = i;
      while (j < g.binary_.size() && g.binary_[j].lhs == g.binary_[i].lhs) ++j;
      g.binary_by_lhs_[index(g.binary_[i].lhs)] = {i, j};
      i = j;
    }
    g.lexical_by_word_.assign(g.terminals_.size(), {});
    for (const auto& r : g.lexical_) g.lexical_by_word_[index(r.word)].push_back(r);
    return g;
  }

 private:
  struct NamedBinary {
    std::string lhs, left, right;
    double prob;
  };
  struct NamedLexical {
    std::string lhs, word;
    double prob;
  };

  static void check_prob(double p, const std::string& lhs) {
    if (!std::isfinite(p)) throw Error("rule for '" + lhs + "' has a non-finite probability");
  }

  std::string start_;
  std::vector<NamedBinary> binary_;
  std::vector<NamedLexical> lexical_;
};

// Empty iff every nonterminal with rules sums to 1 (within `tolerance`), every
// probability lies in (0, 1], and the start symbol has at least one rule.
inline std::vector<std::string> validate(const Grammar& g, double tolerance = 1e-9) {
  std::vector<std::string> violations;
  std::vector<double> sums(g.nonterminal_count(), 0.0);
  std::vector<bool> has_rules(g.nonterminal_count(), false);

  auto check = [&](Nonterminal lhs, double prob, const std::string& rhs) {
    sums[index(lhs)] += prob;
    has_rules[index(lhs)] = true;
    if (!(prob > 0.0 && prob <= 1.0 + tolerance)) {
      violations.push_back("rule " + g.name(lhs) + " -> " + rhs + " has probability " +
                           format_prob(prob) + " outside (0, 1]");
    }
  };
  for (const auto& r : g.binary_rules()) check(r.lhs, r.prob, g.name(r.left) + " " + g.name(r.right));
  for (const auto& r : g.lexical_rules()) check(r.lhs, r.prob, g.name(r.word));

  if (!has_rules[index(g.start())]) {
    violations.push_back("start symbol " + g.start_name() + " has no rules");
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (has_rules[i] && std::abs(sums[i] - 1.0) > tolerance) {
      std::ostringstream msg;
      msg << g.name(static_cast<Nonterminal>(i)) << " sums to " << sums[i];
      violations.push_back(msg.str());
    }
  }
  return violations;
}

struct NamedBinaryRule {
  std::string left;
  std::string right;
  double prob;
};

inline std::vector<NamedBinaryRule> lookup_binary(const Grammar& g, std::string_view lhs) {
  auto id = g.find_nonterminal(lhs);
  if (!id) throw Error("unknown nonterminal '" + std::string(lhs) + "'");
  std::vector<NamedBinaryRule> out;
  for (const auto& r : g.binary_rules(*id)) out.push_back({g.name(r.left), g.name(r.right), r.prob});
  return out;
}

// Relative-frequency estimate from binarized trees, one count per production.
// Names are interned in sorted order, so the result does not depend on the
// order of `trees`.
inline Grammar induce_by_counting(std::span<const ParseTree> trees) {
  if (trees.empty()) throw Error("cannot induce a grammar from an empty treebank");
  const std::string& root = trees.front().label;

  std::map<std::string, double> lhs_counts;
  std::map<std::tuple<std::string, std::string, std::string>, double> binary_counts;
  std::map<std::pair<std::string, std::string>, double> lexical_counts;

  auto visit = [&](auto&& self, const ParseTree& t) -> void {
    if (t.is_leaf()) throw Error("bare word '" + t.label + "' where a node was expected");
    if (t.is_preterminal()) {
      lhs_counts[t.label] += 1;
      lexical_counts[{t.label, t.children.front().label}] += 1;
      return;
    }
    if (t.children.size() != 2 || t.children[0].is_leaf() || t.children[1].is_leaf()) {
      throw Error("non-binary internal node '" + t.label + "'");
    }
    lhs_counts[t.label] += 1;
    binary_counts[{t.label, t.children[0].label, t.children[1].label}] += 1;
    self(self, t.children[0]);
    self(self, t.children[1]);
  };

  for (std::size_t i = 0; i < trees.size(); ++i) {
    if (trees[i].label != root) {
      throw Error("tree " + std::to_string(i + 1) + " has root '" + trees[i].label +
                  "' but the first tree has root '" + root + "'");
    }
    visit(visit, trees[i]);
  }

  GrammarBuilder builder;
  builder.set_start(root);
  for (const auto& [rule, count] : binary_counts) {
    const auto& [lhs, left, right] = rule;
    builder.add_binary(lhs, left, right, count / lhs_counts[lhs]);
  }
  for (const auto& [rule, count] : lexical_counts) {
    builder.add_lexical(rule.first, rule.second, count / lhs_counts[rule.first]);
  }
  return builder.build();
}

// ---------------------------------------------------------------------------
// Text format:
//   start: S
//   S -> A C 0.25
//   A -> x 1.0
// '#' starts a comment.

inline Grammar read_grammar(std::istream& in) {
  GrammarBuilder builder;
  bool have_start = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    auto fail = [&](const std::string& what) {
      throw Error("grammar line " + std::to_string(line_no) + ": " + what);
    };

    if (tok[0] == "start:") {
      if (tok.size() != 2) fail("expected 'start: <SYMBOL>'");
      if (have_start) fail("duplicate start line");
      builder.set_start(tok[1]);
      have_start = true;
      continue;
    }
    if (tok.size() < 4 || tok.size() > 5 || tok[1] != "->") {
      fail("expected 'LHS -> RHS1 [RHS2] <prob>'");
    }
    double prob = 0.0;
    try {
      std::size_t used = 0;
      prob = std::stod(tok.back(), &used);
      if (used != tok.back().size()) fail("bad probability '" + tok.back() + "'");
    } catch (const std::logic_error&) {
      fail("bad probability '" + tok.back() + "'");
    }
    if (tok.size() == 4) {
      builder.add_lexical(tok[0], tok[2], prob);
    } else {
      builder.add_binary(tok[0], tok[2], tok[3], prob);
    }
  }
  if (!have_start) throw Error("grammar has no 'start:' line");
  return builder.build();
}

inline Grammar read_grammar(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_grammar(in);
}

inline void write_grammar(std::ostream& out, const Grammar& g) {
  out << "start: " << g.start_name() << '\n';
  for (const auto& r : g.binary_rules()) {
    out << g.name(r.lhs) << " -> " << g.name(r.left) << ' ' << g.name(r.right) << ' '
        << format_prob(r.prob) << '\n';
  }
  for (const auto& r : g.lexical_rules()) {
    out << g.name(r.lhs) << " -> " << g.name(r.word) << ' ' << format_prob(r.prob) << '\n';
  }
}

inline std::string write_grammar(const Grammar& g) {
  std::ostringstream out;
  write_grammar(out, g);
  return out.str();
}

// Rules keyed by names, for comparing grammars whose ids may differ.
struct NamedRules {
  std::string start;
  std::map<std::tuple<std::string, std::string, std::string>, double> binary;
  std::map<std::pair<std::string, std::string>, double> lexical;
  bool operator==(const NamedRules&) const = default;
};

inline NamedRules named_rules(const Grammar& g) {
  NamedRules out;
  out.start = g.start_name();
  for (const auto& r : g.binary_rules()) out.binary[{g.name(r.lhs), g.name(r.left), g.name(r.right)}] = r.prob;
  for (const auto& r : g.lexical_rules()) out.lexical[{g.name(r.lhs), g.name(r.word)}] = r.prob;
  return out;
}

}  // namespace mbrparse
