#pragma once

// Brute-force references: every derivation of a sentence, exact constituent
// marginals from that list, and exhaustive search over bracketings for the
// recall objectives. Exponential by construction; inputs must be tiny.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mbrparse/common.hpp"
#include "mbrparse/grammar.hpp"
#include "mbrparse/tree.hpp"

namespace mbrparse {

inline std::uint64_t catalan(int m) {
  std::uint64_t c = 1;
  for (int i = 0; i < m; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
  return c;
}

struct EnumeratedParse {
  ParseTree tree;
  double probability;
};

struct EnumeratedForest {
  int sentence_length = 0;
  std::vector<EnumeratedParse> trees;

  double total_probability() const {
    double total = 0.0;
    for (const auto& t : trees) total += t.probability;
    return total;
  }
};

inline constexpr double kDefaultMaxDerivations = 1e6;

// Number of derivations of `words` from the start symbol, in floating point.
inline double count_derivations(const Grammar& g, std::span<const std::string> words) {
  const int n = static_cast<int>(words.size());
  std::map<std::tuple<int, int, std::size_t>, double> count;
  auto at = [&](int s, int t, std::size_t x) {
    auto it = count.find({s, t, x});
    return it == count.end() ? 0.0 : it->second;
  };
  for (int p = 1; p <= n; ++p) {
    auto w = g.find_terminal(words[p - 1]);
    if (!w) continue;
    for (const auto& r : g.lexical_rules_for(*w)) count[{p, p, index(r.lhs)}] += 1.0;
  }
  for (int len = 2; len <= n; ++len) {
    for (int s = 1; s + len - 1 <= n; ++s) {
      const int t = s + len - 1;
      for (int r = s; r < t; ++r) {
        for (const auto& rule : g.binary_rules()) {
          const double c = at(s, r, index(rule.left)) * at(r + 1, t, index(rule.right));
          if (c > 0.0) count[{s, t, index(rule.lhs)}] += c;
        }
      }
    }
  }
  return at(1, n, index(g.start()));
}

// Every derivation with its probability (product of rule probabilities).
// Throws when the number of derivations exceeds `max_derivations`.
inline EnumeratedForest enumerate_parses(const Grammar& g, std::span<const std::string> words,
                                         double max_derivations = kDefaultMaxDerivations) {
  if (words.empty()) throw Error("cannot enumerate parses of an empty sentence");
  const double total = count_derivations(g, words);
  if (total > max_derivations) {
    throw Error("enumeration guard: " + format_prob(total) + " derivations exceeds limit " +
                format_prob(max_derivations));
  }

  using Key = std::tuple<int, int, std::size_t>;
  std::map<Key, std::vector<EnumeratedParse>> memo;

  auto expand = [&](auto&& self, int s, int t, Nonterminal x) -> const std::vector<EnumeratedParse>& {
    Key key{s, t, index(x)};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<EnumeratedParse> out;
    if (s == t) {
      for (const auto& r : g.lexical_rules()) {
        if (r.lhs == x && g.name(r.word) == words[s - 1]) {
          out.push_back({ParseTree::preterminal(g.name(x), words[s - 1]), r.prob});
        }
      }
    } else {
      for (const auto& rule : g.binary_rules(x)) {
        for (int r = s; r < t; ++r) {
          const auto& lefts = self(self, s, r, rule.left);
          if (lefts.empty()) continue;
          const auto& rights = self(self, r + 1, t, rule.right);
          for (const auto& a : lefts) {
            for (const auto& b : rights) {
              out.push_back({ParseTree::node(g.name(x), {a.tree, b.tree}),
                             rule.prob * a.probability * b.probability});
            }
          }
        }
      }
    }
    return memo.emplace(key, std::move(out)).first->second;
  };

  EnumeratedForest forest;
  forest.sentence_length = static_cast<int>(words.size());
  forest.trees = expand(expand, 1, forest.sentence_length, g.start());
  return forest;
}

using PosteriorMap = std::map<Constituent, double>;

// P((s,t,X) in T | words), summed over the forest and normalized.
inline PosteriorMap brute_posterior(const EnumeratedForest& forest) {
  const double total = forest.total_probability();
  if (!(total > 0.0)) throw Error("forest has zero total probability");
  PosteriorMap marginals;
  for (const auto& parse : forest.trees) {
    for (const auto& c : to_constituents(parse.tree).triples) marginals[c] += parse.probability;
  }
  for (auto& [c, p] : marginals) p /= total;
  return marginals;
}

enum class RecallObjective { labelled, bracketed };

struct BruteRecallResult {
  double score = 0.0;
  ConstituentSet constituents;
};

inline constexpr int kMaxBruteLength = 12;

// Exhaustive search over all Catalan(n-1) bracketings. Labelled: each span
// takes its best label. Bracketed: each span scores the sum over labels.
// Spans shorter than `min_span_length` score nothing.
inline BruteRecallResult brute_best_recall_tree(const PosteriorMap& posterior, int n,
                                                RecallObjective objective, int min_span_length = 1) {
  if (n < 1) throw Error("sentence length must be positive");
  if (n > kMaxBruteLength) {
    throw Error("brute-force search limited to " + std::to_string(kMaxBruteLength) + " words");
  }

  struct SpanInfo {
    double best = 0.0;
    double sum = 0.0;
    std::string label = "?";
  };
  std::map<Span, SpanInfo> spans;
  for (const auto& [c, p] : posterior) {
    auto& info = spans[c.span()];
    info.sum += p;
    if (p > info.best) {
      info.best = p;
      info.label = c.label;
    }
  }
  auto span_score = [&](Span sp) {
    if (sp.length() < min_span_length) return 0.0;
    auto it = spans.find(sp);
    if (it == spans.end()) return 0.0;
    return objective == RecallObjective::labelled ? it->second.best : it->second.sum;
  };
  auto span_label = [&](Span sp) {
    auto it = spans.find(sp);
    return it == spans.end() ? std::string("?") : it->second.label;
  };

  // All bracketings of [s, t] as span lists.
  std::map<Span, std::vector<std::vector<Span>>> memo;
  auto bracketings = [&](auto&& self, int s, int t) -> const std::vector<std::vector<Span>>& {
    if (auto it = memo.find({s, t}); it != memo.end()) return it->second;
    std::vector<std::vector<Span>> out;
    if (s == t) {
      out.push_back({{s, t}});
    } else {
      for (int r = s; r < t; ++r) {
        const auto& lefts = self(self, s, r);
        const auto& rights = self(self, r + 1, t);
        for (const auto& a : lefts) {
          for (const auto& b : rights) {
            std::vector<Span> tree{{s, t}};
            tree.insert(tree.end(), a.begin(), a.end());
            tree.insert(tree.end(), b.begin(), b.end());
            out.push_back(std::move(tree));
          }
        }
      }
    }
    return memo.emplace(Span{s, t}, std::move(out)).first->second;
  };

  BruteRecallResult best;
  best.score = -1.0;
  const std::vector<Span>* best_tree = nullptr;
  for (const auto& tree : bracketings(bracketings, 1, n)) {
    double score = 0.0;
    for (const auto& sp : tree) score += span_score(sp);
    if (score > best.score) {
      best.score = score;
      best_tree = &tree;
    }
  }
  best.constituents.sentence_length = n;
  for (const auto& sp : *best_tree) best.constituents.triples.insert({sp.start, sp.end, span_label(sp)});
  return best;
}

}  // namespace mbrparse
