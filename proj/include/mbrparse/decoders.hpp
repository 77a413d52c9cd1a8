#pragma once

// Labelled Tree (Viterbi), Labelled Recall and Bracketed Recall decoding, and
// the right-branching fallback for sentences the grammar cannot parse.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbrparse/chart.hpp"
#include "mbrparse/common.hpp"
#include "mbrparse/grammar.hpp"
#include "mbrparse/tree.hpp"

namespace mbrparse {

enum class Objective { labelled_tree, labelled_recall, bracketed_recall, fallback };

inline std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::labelled_tree: return "labelled-tree";
    case Objective::labelled_recall: return "labelled-recall";
    case Objective::bracketed_recall: return "bracketed-recall";
    case Objective::fallback: return "fallback";
  }
  return "?";
}

inline Objective parse_objective(std::string_view name) {
  if (name == "labelled-tree" || name == "viterbi") return Objective::labelled_tree;
  if (name == "labelled-recall") return Objective::labelled_recall;
  if (name == "bracketed-recall") return Objective::bracketed_recall;
  throw Error("unknown decoder '" + std::string(name) + "'");
}

inline constexpr std::string_view kFallbackLabel = "X_FALLBACK";

// Score comparisons treat differences below this as ties.
inline constexpr double kTieTolerance = 1e-12;

struct DecodeOptions {
  // Spans shorter than this contribute nothing to recall objectives. 1 counts
  // preterminals; 2 restricts the objective to phrasal constituents.
  int min_span_length = 1;
};

struct DecodeResult {
  ParseTree tree;
  // Recall objectives: expected number of correct constituents (maxc[1,n]).
  // Labelled tree: probability of the tree.
  double expected_score = 0.0;
  Objective objective = Objective::fallback;
};

namespace detail {

inline bool better(double candidate, double best) {
  if (std::isinf(best)) return candidate > best;
  return candidate > best + kTieTolerance * std::max(1.0, std::abs(best));
}

inline ParseTree build_tree(std::span<const std::string> words, int s, int t,
                            const auto& label_of, const auto& split_of) {
  if (s == t) return ParseTree::preterminal(label_of(s, t), words[s - 1]);
  const int r = split_of(s, t);
  std::vector<ParseTree> kids;
  kids.push_back(build_tree(words, s, r, label_of, split_of));
  kids.push_back(build_tree(words, r + 1, t, label_of, split_of));
  return ParseTree::node(label_of(s, t), std::move(kids));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Recall decoding

struct MaxcCell {
  double score = 0.0;       // best expected correct constituents inside the span
  double span_score = 0.0;  // contribution of the span itself
  Nonterminal best_label{};  // argmax_X g(s,t,X), smallest id on ties
  int best_split = 0;       // 0 for single words
};

// maxc(s,t) = span_score(s,t) + max_r [maxc(s,r) + maxc(r+1,t)], where the
// span score is max_X g for the labelled objective and sum_X g for the
// bracketed one. Single-word spans are the base case.
class MaxcTable {
 public:
  MaxcTable(const PosteriorTable& posterior, Objective objective, DecodeOptions options = {})
      : n_(posterior.n), cells_(posterior.g.sentence_length(), 1) {
    if (objective != Objective::labelled_recall && objective != Objective::bracketed_recall) {
      throw Error("MaxcTable needs a recall objective");
    }
    const int k = posterior.g.label_count();
    for (int len = 1; len <= n_; ++len) {
      for (int s = 1; s + len - 1 <= n_; ++s) {
        const int t = s + len - 1;
        auto g = posterior.g.labels(s, t);
        MaxcCell& cell = cells_.at(s, t, 0);

        double max_g = -1.0;
        double sum_g = 0.0;
        for (int x = 0; x < k; ++x) {
          sum_g += g[x];
          if (detail::better(g[x], max_g)) {
            max_g = g[x];
            cell.best_label = static_cast<Nonterminal>(x);
          }
        }
        if (len >= options.min_span_length) {
          cell.span_score = objective == Objective::labelled_recall ? max_g : sum_g;
        }

        double best_split = 0.0;
        if (len > 1) {
          best_split = -std::numeric_limits<double>::infinity();
          for (int r = s; r < t; ++r) {
            const double v = cells_.at(s, r, 0).score + cells_.at(r + 1, t, 0).score;
            if (detail::better(v, best_split)) {
              best_split = v;
              cell.best_split = r;
            }
          }
        }
        cell.score = cell.span_score + best_split;
      }
    }
  }

  int sentence_length() const { return n_; }
  const MaxcCell& cell(int s, int t) const { return cells_.at(s, t, 0); }
  double best_score() const { return cell(1, n_).score; }

 private:
  int n_;
  SpanTable<MaxcCell> cells_;
};

// Decodes from an existing posterior table.
inline DecodeResult recall_decode(const Grammar& grammar, const PosteriorTable& posterior,
                                  std::span<const std::string> words, Objective objective,
                                  DecodeOptions options = {}) {
  MaxcTable maxc(posterior, objective, options);
  auto label_of = [&](int s, int t) { return grammar.name(maxc.cell(s, t).best_label); };
  auto split_of = [&](int s, int t) { return maxc.cell(s, t).best_split; };
  return {detail::build_tree(words, 1, posterior.n, label_of, split_of), maxc.best_score(), objective};
}

inline std::optional<DecodeResult> labelled_recall_parse(const Grammar& grammar,
                                                         std::span<const std::string> words,
                                                         DecodeOptions options = {}) {
  Chart chart = build_chart(grammar, words);
  if (!chart.parsable()) return std::nullopt;
  return recall_decode(grammar, *chart.posterior, words, Objective::labelled_recall, options);
}

// Output nodes carry the argmax-posterior label; the score ignores labels.
inline std::optional<DecodeResult> bracketed_recall_parse(const Grammar& grammar,
                                                          std::span<const std::string> words,
                                                          DecodeOptions options = {}) {
  Chart chart = build_chart(grammar, words);
  if (!chart.parsable()) return std::nullopt;
  return recall_decode(grammar, *chart.posterior, words, Objective::bracketed_recall, options);
}

// ---------------------------------------------------------------------------
// Viterbi

// Max-product CKY in log space. Ties go to the smallest split point, then to
// the first rule in (left, right) id order.
inline std::optional<DecodeResult> viterbi_parse(const Grammar& grammar,
                                                 std::span<const std::string> words) {
  if (words.empty()) throw Error("cannot parse an empty sentence");
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  struct Back {
    int split = 0;
    std::size_t rule = 0;
  };

  const int n = static_cast<int>(words.size());
  const int k = static_cast<int>(grammar.nonterminal_count());
  SpanTable<double> best(n, k, kNone);
  SpanTable<Back> back(n, k);

  const auto ids = lookup_words(grammar, words);
  for (int p = 1; p <= n; ++p) {
    if (!ids[p - 1]) continue;
    for (const auto& r : grammar.lexical_rules_for(*ids[p - 1])) {
      best.at(p, p, index(r.lhs)) = std::log(r.prob);
    }
  }

  const auto rules = grammar.binary_rules();
  for (int len = 2; len <= n; ++len) {
    for (int s = 1; s + len - 1 <= n; ++s) {
      const int t = s + len - 1;
      auto cell = best.labels(s, t);
      auto cell_back = back.labels(s, t);
      for (int r = s; r < t; ++r) {
        auto left = best.labels(s, r);
        auto right = best.labels(r + 1, t);
        for (std::size_t i = 0; i < rules.size(); ++i) {
          const auto& rule = rules[i];
          const double l = left[index(rule.left)];
          if (l == kNone) continue;
          const double rr = right[index(rule.right)];
          if (rr == kNone) continue;
          const double v = std::log(rule.prob) + l + rr;
          double& slot = cell[index(rule.lhs)];
          if (slot == kNone || v > slot + kTieTolerance) {
            slot = v;
            cell_back[index(rule.lhs)] = {r, i};
          }
        }
      }
    }
  }

  const double top = best.at(1, n, index(grammar.start()));
  if (top == kNone) return std::nullopt;

  auto build = [&](auto&& self, int s, int t, Nonterminal x) -> ParseTree {
    if (s == t) return ParseTree::preterminal(grammar.name(x), words[s - 1]);
    const Back& b = back.at(s, t, index(x));
    const auto& rule = rules[b.rule];
    std::vector<ParseTree> kids;
    kids.push_back(self(self, s, b.split, rule.left));
    kids.push_back(self(self, b.split + 1, t, rule.right));
    return ParseTree::node(grammar.name(x), std::move(kids));
  };
  return DecodeResult{build(build, 1, n, grammar.start()), std::exp(top), Objective::labelled_tree};
}

// ---------------------------------------------------------------------------
// Fallback

// Right-branching: (i, n) splits into (i, i) and (i+1, n); every node is
// labelled X_FALLBACK.
inline DecodeResult fallback_parse(std::span<const std::string> words) {
  if (words.empty()) throw Error("cannot parse an empty sentence");
  const std::string label(kFallbackLabel);
  const int n = static_cast<int>(words.size());
  ParseTree tree = ParseTree::preterminal(label, words[n - 1]);
  for (int i = n - 1; i >= 1; --i) {
    std::vector<ParseTree> kids;
    kids.push_back(ParseTree::preterminal(label, words[i - 1]));
    kids.push_back(std::move(tree));
    tree = ParseTree::node(label, std::move(kids));
  }
  return {std::move(tree), 0.0, Objective::fallback};
}

// ---------------------------------------------------------------------------

// Decodes with the requested objective, routing unparsable sentences to the
// fallback. `chart` may be supplied to share one chart across objectives.
inline DecodeResult decode(const Grammar& grammar, std::span<const std::string> words,
                           Objective objective, DecodeOptions options = {},
                           const Chart* chart = nullptr) {
  std::optional<DecodeResult> result;
  switch (objective) {
    case Objective::labelled_tree:
      result = viterbi_parse(grammar, words);
      break;
    case Objective::labelled_recall:
    case Objective::bracketed_recall:
      if (chart) {
        if (chart->parsable()) result = recall_decode(grammar, *chart->posterior, words, objective, options);
      } else {
        result = objective == Objective::labelled_recall ? labelled_recall_parse(grammar, words, options)
                                                         : bracketed_recall_parse(grammar, words, options);
      }
      break;
    case Objective::fallback:
      break;
  }
  if (!result) return fallback_parse(words);
  return std::move(*result);
}

// Expected labelled-correct count of a tree: sum of g over its constituents.
// Labels the grammar does not know score 0.
inline double expected_labelled_score(const Grammar& grammar, const PosteriorTable& posterior,
                                      const ConstituentSet& tree, int min_span_length = 1) {
  double total = 0.0;
  for (const auto& c : tree.triples) {
    if (c.length() < min_span_length) continue;
    if (auto x = grammar.find_nonterminal(c.label)) total += posterior(c.start, c.end, *x);
  }
  return total;
}

// Expected bracket-correct count: sum over the tree's spans of sum_X g.
inline double expected_bracketed_score(const PosteriorTable& posterior, const ConstituentSet& tree,
                                       int min_span_length = 1) {
  std::set<Span> spans;
  for (const auto& c : tree.triples) {
    if (c.length() >= min_span_length) spans.insert(c.span());
  }
  double total = 0.0;
  for (const auto& sp : spans) {
    for (double g : posterior.g.labels(sp.start, sp.end)) total += g;
  }
  return total;
}

}  // namespace mbrparse
