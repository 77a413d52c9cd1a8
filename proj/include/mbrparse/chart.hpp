#pragma once

// Inside, outside and posterior constituent probabilities for one sentence.
//
// Tables are kept in scaled linear space: every lexical entry at position p is
// divided by c_p, the largest lexical probability at p. Because each span's
// inside value is a sum of products of exactly one lexical entry per covered
// position, the recursions are unchanged and the scaled inside value equals
// e(s,t,X) / prod_{p=s..t} c_p. Outside values are scaled by the positions
// outside the span, so f*e scales by the whole-sentence product and the
// posterior ratio needs no correction.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mbrparse/common.hpp"
#include "mbrparse/grammar.hpp"

namespace mbrparse {

// Dense table over (span, label). Spans are 1-based and inclusive; storage is
// length-major so that all labels of one span are contiguous.
template <typename T>
class SpanTable {
 public:
  SpanTable() = default;
  SpanTable(int n, int labels, T init = T{})
      : n_(n), labels_(labels), cells_(static_cast<std::size_t>(n) * n * labels, init) {}

  int sentence_length() const { return n_; }
  int label_count() const { return labels_; }

  T& at(int s, int t, std::size_t label) { return cells_[offset(s, t) + label]; }
  const T& at(int s, int t, std::size_t label) const { return cells_[offset(s, t) + label]; }

  std::span<T> labels(int s, int t) { return {cells_.data() + offset(s, t), static_cast<std::size_t>(labels_)}; }
  std::span<const T> labels(int s, int t) const {
    return {cells_.data() + offset(s, t), static_cast<std::size_t>(labels_)};
  }

 private:
  std::size_t offset(int s, int t) const {
    return (static_cast<std::size_t>(t - s) * n_ + (s - 1)) * labels_;
  }

  int n_ = 0;
  int labels_ = 0;
  std::vector<T> cells_;
};

// Maps words to terminal ids; unknown words become nullopt.
inline std::vector<std::optional<Terminal>> lookup_words(const Grammar& g,
                                                         std::span<const std::string> words) {
  std::vector<std::optional<Terminal>> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(g.find_terminal(w));
  return ids;
}

struct InsideTable {
  int n = 0;
  Nonterminal start{};
  SpanTable<double> scaled;
  // log_prefix[p] = sum of log c_q for q < p+1 (size n+1).
  std::vector<double> log_prefix;
  double log_sentence_prob = -std::numeric_limits<double>::infinity();

  double log_scale(int s, int t) const { return log_prefix[t] - log_prefix[s - 1]; }

  // Unscaled e(s,t,X); may underflow to 0 for very long sentences.
  double value(int s, int t, Nonterminal x) const {
    double v = scaled.at(s, t, index(x));
    return v == 0.0 ? 0.0 : v * std::exp(log_scale(s, t));
  }

  double sentence_prob() const { return std::exp(log_sentence_prob); }
  bool parsable() const { return scaled.at(1, n, index(start)) > 0.0; }
};

struct OutsideTable {
  int n = 0;
  SpanTable<double> scaled;
  std::vector<double> log_prefix;

  double value(int s, int t, Nonterminal x) const {
    double v = scaled.at(s, t, index(x));
    if (v == 0.0) return 0.0;
    return v * std::exp(log_prefix[n] - (log_prefix[t] - log_prefix[s - 1]));
  }
};

struct PosteriorTable {
  int n = 0;
  SpanTable<double> g;

  double operator()(int s, int t, Nonterminal x) const { return g.at(s, t, index(x)); }
};

inline InsideTable compute_inside(const Grammar& grammar, std::span<const std::string> words) {
  if (words.empty()) throw Error("cannot parse an empty sentence");
  const int n = static_cast<int>(words.size());
  const int k = static_cast<int>(grammar.nonterminal_count());

  InsideTable in;
  in.n = n;
  in.start = grammar.start();
  in.scaled = SpanTable<double>(n, k, 0.0);
  in.log_prefix.assign(n + 1, 0.0);

  const auto ids = lookup_words(grammar, words);
  for (int p = 1; p <= n; ++p) {
    double scale = 0.0;
    if (ids[p - 1]) {
      for (const auto& r : grammar.lexical_rules_for(*ids[p - 1])) scale = std::max(scale, r.prob);
      for (const auto& r : grammar.lexical_rules_for(*ids[p - 1])) {
        in.scaled.at(p, p, index(r.lhs)) = r.prob / scale;
      }
    }
    in.log_prefix[p] = in.log_prefix[p - 1] + (scale > 0.0 ? std::log(scale) : 0.0);
  }

  const auto rules = grammar.binary_rules();
  for (int len = 2; len <= n; ++len) {
    for (int s = 1; s + len - 1 <= n; ++s) {
      const int t = s + len - 1;
      auto cell = in.scaled.labels(s, t);
      for (int r = s; r < t; ++r) {
        auto left = in.scaled.labels(s, r);
        auto right = in.scaled.labels(r + 1, t);
        for (const auto& rule : rules) {
          const double l = left[index(rule.left)];
          if (l == 0.0) continue;
          const double rr = right[index(rule.right)];
          if (rr == 0.0) continue;
          cell[index(rule.lhs)] += rule.prob * l * rr;
        }
      }
    }
  }

  const double top = in.scaled.at(1, n, index(in.start));
  if (top > 0.0) in.log_sentence_prob = std::log(top) + in.log_prefix[n];
  return in;
}

inline OutsideTable compute_outside(const Grammar& grammar, const InsideTable& inside) {
  const int n = inside.n;
  const int k = static_cast<int>(grammar.nonterminal_count());
  OutsideTable out;
  out.n = n;
  out.scaled = SpanTable<double>(n, k, 0.0);
  out.log_prefix = inside.log_prefix;
  if (!inside.parsable()) return out;

  out.scaled.at(1, n, index(grammar.start())) = 1.0;
  const auto rules = grammar.binary_rules();
  for (int len = n; len >= 2; --len) {
    for (int s = 1; s + len - 1 <= n; ++s) {
      const int t = s + len - 1;
      auto parent = out.scaled.labels(s, t);
      for (int r = s; r < t; ++r) {
        auto left_in = inside.scaled.labels(s, r);
        auto right_in = inside.scaled.labels(r + 1, t);
        auto left_out = out.scaled.labels(s, r);
        auto right_out = out.scaled.labels(r + 1, t);
        for (const auto& rule : rules) {
          const double f = parent[index(rule.lhs)];
          if (f == 0.0) continue;
          const double w = rule.prob * f;
          left_out[index(rule.left)] += w * right_in[index(rule.right)];
          right_out[index(rule.right)] += w * left_in[index(rule.left)];
        }
      }
    }
  }
  return out;
}

// g(s,t,X) = f(s,t,X) e(s,t,X) / e(1,n,S). Throws Unparsable when e(1,n,S) = 0.
inline PosteriorTable compute_posterior(const InsideTable& inside, const OutsideTable& outside) {
  if (!inside.parsable()) throw Unparsable("sentence has zero probability under the grammar");
  const int n = inside.n;
  const int k = inside.scaled.label_count();
  const double top = inside.scaled.at(1, n, index(inside.start));

  PosteriorTable post;
  post.n = n;
  post.g = SpanTable<double>(n, k, 0.0);
  for (int len = 1; len <= n; ++len) {
    for (int s = 1; s + len - 1 <= n; ++s) {
      const int t = s + len - 1;
      auto e = inside.scaled.labels(s, t);
      auto f = outside.scaled.labels(s, t);
      auto g = post.g.labels(s, t);
      for (int x = 0; x < k; ++x) g[x] = f[x] * e[x] / top;
    }
  }
  return post;
}

struct Chart {
  InsideTable inside;
  OutsideTable outside;
  std::optional<PosteriorTable> posterior;  // empty when unparsable

  int sentence_length() const { return inside.n; }
  bool parsable() const { return posterior.has_value(); }
  double sentence_prob() const { return inside.sentence_prob(); }
};

inline Chart build_chart(const Grammar& grammar, std::span<const std::string> words) {
  Chart chart;
  chart.inside = compute_inside(grammar, words);
  chart.outside = compute_outside(grammar, chart.inside);
  if (chart.inside.parsable()) chart.posterior = compute_posterior(chart.inside, chart.outside);
  return chart;
}

// Tab-separated "s t X e f g" for every entry with nonzero inside value.
inline void dump_chart(std::ostream& out, const Grammar& grammar, const Chart& chart) {
  const int n = chart.sentence_length();
  for (int len = 1; len <= n; ++len) {
    for (int s = 1; s + len - 1 <= n; ++s) {
      const int t = s + len - 1;
      for (std::size_t x = 0; x < grammar.nonterminal_count(); ++x) {
        const auto label = static_cast<Nonterminal>(x);
        if (chart.inside.scaled.at(s, t, x) == 0.0) continue;
        const double g = chart.posterior ? (*chart.posterior)(s, t, label) : 0.0;
        out << s << '\t' << t << '\t' << grammar.name(label) << '\t'
            << format_prob(chart.inside.value(s, t, label)) << '\t'
            << format_prob(chart.outside.value(s, t, label)) << '\t' << format_prob(g) << '\n';
      }
    }
  }
}

}  // namespace mbrparse
