#pragma once

// The six bracket metrics for one (guessed, correct) pair, corpus pooling, and
// summary statistics with paired differences.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mbrparse/common.hpp"
#include "mbrparse/tree.hpp"

namespace mbrparse {

// (s,t) crosses (q,r) iff s < q <= t < r or q < s <= r < t.
constexpr bool crosses(Span a, Span b) {
  return (a.start < b.start && b.start <= a.end && a.end < b.end) ||
         (b.start < a.start && a.start <= b.end && b.end < a.end);
}

struct EvalCounts {
  long labelled = 0;    // L
  long bracketed = 0;   // B
  long consistent = 0;  // C
  long guessed = 0;     // N_G
  long correct = 0;     // N_C

  EvalCounts& operator+=(const EvalCounts& o) {
    labelled += o.labelled;
    bracketed += o.bracketed;
    consistent += o.consistent;
    guessed += o.guessed;
    correct += o.correct;
    return *this;
  }
  bool operator==(const EvalCounts&) const = default;
};

enum class Metric {
  labelled_recall,
  labelled_tree,
  bracketed_recall,
  bracketed_tree,
  consistent_brackets_recall,
  consistent_brackets_tree,
};

inline constexpr std::array<Metric, 6> kAllMetrics = {
    Metric::labelled_tree,    Metric::labelled_recall,           Metric::bracketed_recall,
    Metric::bracketed_tree,   Metric::consistent_brackets_recall, Metric::consistent_brackets_tree,
};

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::labelled_recall: return "labelled_recall";
    case Metric::labelled_tree: return "labelled_tree";
    case Metric::bracketed_recall: return "bracketed_recall";
    case Metric::bracketed_tree: return "bracketed_tree";
    case Metric::consistent_brackets_recall: return "consistent_brackets_recall";
    case Metric::consistent_brackets_tree: return "consistent_brackets_tree";
  }
  return "?";
}

inline std::string_view metric_title(Metric m) {
  switch (m) {
    case Metric::labelled_recall: return "Label Recall";
    case Metric::labelled_tree: return "Label Tree";
    case Metric::bracketed_recall: return "Brack Recall";
    case Metric::bracketed_tree: return "Brack Tree";
    case Metric::consistent_brackets_recall: return "Cons Brack Recall";
    case Metric::consistent_brackets_tree: return "Cons Brack Tree";
  }
  return "?";
}

struct MetricReport {
  std::array<double, 6> values{};

  double operator[](Metric m) const { return values[static_cast<std::size_t>(m)]; }
  double& operator[](Metric m) { return values[static_cast<std::size_t>(m)]; }
};

// A ratio with an empty denominator is 1: nothing was there to get wrong.
inline double rate(long num, long den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline MetricReport rates(const EvalCounts& c) {
  MetricReport r;
  r[Metric::labelled_recall] = rate(c.labelled, c.correct);
  r[Metric::labelled_tree] = c.labelled == c.correct ? 1.0 : 0.0;
  r[Metric::bracketed_recall] = rate(c.bracketed, c.correct);
  r[Metric::bracketed_tree] = c.bracketed == c.correct ? 1.0 : 0.0;
  r[Metric::consistent_brackets_recall] = rate(c.consistent, c.guessed);
  r[Metric::consistent_brackets_tree] = c.consistent == c.guessed ? 1.0 : 0.0;
  return r;
}

struct PairEvaluation {
  EvalCounts counts;
  MetricReport report;
};

// Not symmetric: `guessed` supplies N_G and the triples being judged.
// Constituents shorter than `min_span_length` are ignored on both sides.
inline PairEvaluation evaluate_pair(const ConstituentSet& guessed_all, const ConstituentSet& correct_all,
                                    int min_span_length = 1) {
  if (guessed_all.sentence_length != correct_all.sentence_length) {
    throw Error("sentence length mismatch: guessed " + std::to_string(guessed_all.sentence_length) +
                " words, correct " + std::to_string(correct_all.sentence_length));
  }
  const ConstituentSet guessed = guessed_all.filtered(min_span_length);
  const ConstituentSet correct = correct_all.filtered(min_span_length);

  std::set<Span> correct_spans;
  for (const auto& c : correct.triples) correct_spans.insert(c.span());

  EvalCounts counts;
  counts.guessed = static_cast<long>(guessed.size());
  counts.correct = static_cast<long>(correct.size());
  for (const auto& g : guessed.triples) {
    if (correct.contains(g)) ++counts.labelled;
    if (correct_spans.count(g.span())) ++counts.bracketed;
    const bool crossed = std::any_of(correct_spans.begin(), correct_spans.end(),
                                     [&](const Span& c) { return crosses(g.span(), c); });
    if (!crossed) ++counts.consistent;
  }
  return {counts, rates(counts)};
}

inline PairEvaluation evaluate_pair(const ParseTree& guessed, const ParseTree& correct, int min_span_length = 1) {
  return evaluate_pair(to_constituents(guessed), to_constituents(correct), min_span_length);
}

// ---------------------------------------------------------------------------
// Corpus level

enum class Averaging { micro, macro };

inline Averaging parse_averaging(std::string_view name) {
  if (name == "micro") return Averaging::micro;
  if (name == "macro") return Averaging::macro;
  throw Error("unknown averaging mode '" + std::string(name) + "'");
}

// Folds per-sentence evaluations. Micro pools L, B, C, N_G and N_C before
// dividing; macro averages per-sentence rates. Tree metrics are the fraction
// of sentences scoring 1 under both.
class CorpusEvaluation {
 public:
  void add(const PairEvaluation& e) {
    totals_ += e.counts;
    for (std::size_t i = 0; i < 6; ++i) rate_sums_.values[i] += e.report.values[i];
    ++sentences_;
  }

  std::size_t sentences() const { return sentences_; }
  const EvalCounts& totals() const { return totals_; }

  MetricReport report(Averaging mode) const {
    MetricReport r;
    if (sentences_ == 0) return r;
    const double n = static_cast<double>(sentences_);
    for (std::size_t i = 0; i < 6; ++i) r.values[i] = rate_sums_.values[i] / n;
    if (mode == Averaging::micro) {
      const MetricReport pooled = rates(totals_);
      r[Metric::labelled_recall] = pooled[Metric::labelled_recall];
      r[Metric::bracketed_recall] = pooled[Metric::bracketed_recall];
      r[Metric::consistent_brackets_recall] = pooled[Metric::consistent_brackets_recall];
    }
    return r;
  }

 private:
  EvalCounts totals_;
  MetricReport rate_sums_;
  std::size_t sentences_ = 0;
};

struct Summary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation; 0 for a single item
  std::size_t count = 0;
};

inline Summary summarize(std::span<const double> xs) {
  if (xs.empty()) throw Error("cannot summarize an empty sample");
  Summary s;
  s.count = xs.size();
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct PairedSummary {
  Summary difference;  // first minus second, item-wise
  double t_statistic = 0.0;
  bool t_defined = false;  // false when the differences have zero spread
};

struct CorpusReport {
  std::array<Summary, 6> first;
  std::optional<std::array<Summary, 6>> second;
  std::optional<std::array<PairedSummary, 6>> paired;

  const Summary& operator[](Metric m) const { return first[static_cast<std::size_t>(m)]; }
};

inline PairedSummary paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("paired samples differ in length");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  PairedSummary p;
  p.difference = summarize(diff);
  if (diff.size() > 1 && p.difference.stdev > 0.0) {
    p.t_statistic = p.difference.mean / (p.difference.stdev / std::sqrt(static_cast<double>(diff.size())));
    p.t_defined = true;
  }
  return p;
}

inline CorpusReport aggregate(std::span<const MetricReport> items,
                              std::optional<std::span<const MetricReport>> pairing = std::nullopt) {
  if (items.empty()) throw Error("cannot aggregate an empty report list");
  if (pairing && pairing->size() != items.size()) {
    throw Error("paired report lists differ in length: " + std::to_string(items.size()) + " vs " +
                std::to_string(pairing->size()));
  }
  auto column = [](std::span<const MetricReport> rs, std::size_t m) {
    std::vector<double> out;
    out.reserve(rs.size());
    for (const auto& r : rs) out.push_back(r.values[m]);
    return out;
  };

  CorpusReport report;
  for (std::size_t m = 0; m < 6; ++m) report.first[m] = summarize(column(items, m));
  if (pairing) {
    report.second.emplace();
    report.paired.emplace();
    for (std::size_t m = 0; m < 6; ++m) {
      auto a = column(items, m);
      auto b = column(*pairing, m);
      (*report.second)[m] = summarize(b);
      (*report.paired)[m] = paired_difference(a, b);
    }
  }
  return report;
}

}  // namespace mbrparse
