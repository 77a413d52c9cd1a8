// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Tolerances are fixed here and printed with each result.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mbrparse/chart.hpp"
#include "mbrparse/cli.hpp"
#include "mbrparse/decoders.hpp"
#include "mbrparse/metrics.hpp"
#include "mbrparse/oracle.hpp"
#include "mbrparse/sampling.hpp"
#include "test_support.hpp"

using namespace mbrparse;
using clock_type = std::chrono::steady_clock;

namespace {

constexpr double kExactTol = 1e-12;
constexpr double kOracleRelTol = 1e-9;
constexpr double kPosteriorTol = 1e-9;
constexpr double kMassTol = 1e-6;
constexpr int kOracleInstances = 200;
constexpr int kMetricPairs = 500;
constexpr int kBinarizeTrees = 1000;
constexpr std::size_t kCorpusSize = 500;
constexpr double kScalingLow = 5.5;
constexpr double kScalingHigh = 11.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int failures = 0;

void run(int id, const char* name, double time_limit, const std::function<Outcome()>& body) {
  const auto t0 = clock_type::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
  if (time_limit > 0 && secs >= time_limit) {
    o.require(false, "took " + format_fixed(secs, 2) + " s, limit " + format_fixed(time_limit, 0) + " s");
  }
  std::printf("[%s] criterion %d: %s (%.3f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, name, secs,
              o.detail.empty() ? "" : " -- ", o.detail.c_str());
  if (!o.pass) ++failures;
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Random oracle instances shared by criteria 2 to 5.
struct Instance {
  Grammar grammar;
  Sentence words;
  EnumeratedForest forest;
};

std::vector<Instance> oracle_instances() {
  Rng rng(20240601);
  std::vector<Instance> out;
  while (static_cast<int>(out.size()) < kOracleInstances) {
    RandomGrammarParams params;
    params.nonterminals = 1 + static_cast<int>(rng() % 5);
    params.terminals = 2 + static_cast<int>(rng() % 2);
    params.max_rules = 25;
    Grammar g = random_grammar(params, rng);
    auto tree = TreeSampler(g).sample_length(rng, 1, 7);
    if (!tree) continue;
    auto words = yield(*tree);
    try {
      auto forest = enumerate_parses(g, words);
      out.push_back({std::move(g), std::move(words), std::move(forest)});
    } catch (const Error&) {
      // Enumeration guard tripped; draw another instance.
    }
  }
  return out;
}

Outcome recall_equivalence(const std::vector<Instance>& instances, Objective objective, RecallObjective brute) {
  Outcome o;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const int n = static_cast<int>(inst.words.size());
    auto posterior = brute_posterior(inst.forest);
    for (int min_len : {1, 2}) {
      auto dp = objective == Objective::labelled_recall ? labelled_recall_parse(inst.grammar, inst.words, {min_len})
                                                        : bracketed_recall_parse(inst.grammar, inst.words, {min_len});
      const double want = brute_best_recall_tree(posterior, n, brute, min_len).score;
      o.require(dp.has_value() && close_rel(dp->expected_score, want, kOracleRelTol),
                "instance " + std::to_string(i) + " min length " + std::to_string(min_len) + ": dp " +
                    (dp ? format_prob(dp->expected_score) : "none") + " vs brute " + format_prob(want));
    }
  }
  if (o.pass) o.detail = std::to_string(instances.size()) + " instances, rel tol 1e-9";
  return o;
}

// Grammar with 7 nonterminals, 43 binary rules and 7 lexical rules (r = 50).
Grammar scaling_grammar() {
  GrammarBuilder b;
  b.set_start("N0");
  const int k = 7;
  for (int x = 0; x < k; ++x) {
    const std::string lhs = "N" + std::to_string(x);
    const int rules = x < 1 ? 7 : 6;
    for (int j = 0; j < rules; ++j) {
      b.add_binary(lhs, "N" + std::to_string((x + j) % k), "N" + std::to_string((x + 2 * j + 1) % k),
                   0.6 / rules);
    }
    b.add_lexical(lhs, "w", 0.4);
  }
  return b.build();
}

double median_seconds(const Grammar& g, int n) {
  Sentence words(n, "w");
  auto once = [&] {
    Chart chart = build_chart(g, words);
    auto r = recall_decode(g, *chart.posterior, words, Objective::labelled_recall, {});
    return r.expected_score;
  };
  // Batch enough repetitions that each sample is well above timer noise.
  int batch = 1;
  for (;;) {
    const auto t0 = clock_type::now();
    for (int i = 0; i < batch; ++i) once();
    if (std::chrono::duration<double>(clock_type::now() - t0).count() > 0.02) break;
    batch *= 2;
  }
  std::vector<double> samples;
  volatile double sink = 0.0;
  for (int s = 0; s < 15; ++s) {
    const auto t0 = clock_type::now();
    for (int i = 0; i < batch; ++i) sink = sink + once();
    samples.push_back(std::chrono::duration<double>(clock_type::now() - t0).count() / batch);
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

int main() {
  std::printf("mbrparse acceptance run\n");

  run(1, "toy grammar posteriors, recall tree and viterbi expected count", 1.0, [] {
    Outcome o;
    Grammar g = testing::toy_grammar();
    auto words = testing::words("x x x x");
    Chart chart = build_chart(g, words);
    const auto& post = *chart.posterior;
    auto at = [&](int s, int t, const char* x) { return post(s, t, *g.find_nonterminal(x)); };
    o.require(std::abs(at(1, 4, "S") - 1.0) <= kExactTol, "g(1,4,S)");
    o.require(std::abs(at(1, 2, "A") - 0.5) <= kExactTol, "g(1,2,A)");
    o.require(std::abs(at(3, 4, "C") - 0.25) <= kExactTol, "g(3,4,C)");
    o.require(std::abs(at(3, 4, "B") - 0.5) <= kExactTol, "g(3,4,B)");

    auto lr = labelled_recall_parse(g, words, {2});
    o.require(lr && write_bracketed(lr->tree) == "(S (A (X_x x) (X_x x)) (B (X_x x) (X_x x)))", "recall tree");
    o.require(lr && std::abs(lr->expected_score - 2.0) <= kExactTol, "recall expected score");

    auto vt = viterbi_parse(g, words);
    const double expected_l = vt ? expected_labelled_score(g, post, to_constituents(vt->tree), 2) : -1;
    o.require(std::abs(expected_l - 1.75) <= kExactTol, "viterbi expected L " + format_prob(expected_l));
    if (o.pass) o.detail = "tol 1e-12";
    return o;
  });

  const auto t0 = clock_type::now();
  const auto instances = oracle_instances();
  const double setup = std::chrono::duration<double>(clock_type::now() - t0).count();
  std::printf("  (%zu oracle instances prepared in %.3f s; k <= 5, rules <= 25, n <= 7)\n", instances.size(), setup);

  run(2, "labelled recall decoder matches brute force", 60.0, [&] {
    return recall_equivalence(instances, Objective::labelled_recall, RecallObjective::labelled);
  });

  run(3, "bracketed recall decoder matches brute force", 60.0, [&] {
    return recall_equivalence(instances, Objective::bracketed_recall, RecallObjective::bracketed);
  });

  run(4, "viterbi probability matches best enumerated parse", 60.0, [&] {
    Outcome o;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      double best = 0.0;
      for (const auto& p : inst.forest.trees) best = std::max(best, p.probability);
      auto vt = viterbi_parse(inst.grammar, inst.words);
      o.require(vt && close_rel(vt->expected_score, best, kOracleRelTol),
                "instance " + std::to_string(i) + ": " + (vt ? format_prob(vt->expected_score) : "none") +
                    " vs " + format_prob(best));
      if (vt) {
        const bool enumerated = std::any_of(inst.forest.trees.begin(), inst.forest.trees.end(),
                                            [&](const auto& p) { return p.tree == vt->tree; });
        o.require(enumerated, "instance " + std::to_string(i) + ": viterbi tree not in the forest");
      }
    }
    if (o.pass) o.detail = std::to_string(instances.size()) + " instances, rel tol 1e-9";
    return o;
  });

  run(5, "chart posteriors match enumeration; mass 2n-1; root posterior 1", 60.0, [&] {
    Outcome o;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      const auto& g = inst.grammar;
      const int n = static_cast<int>(inst.words.size());
      Chart chart = build_chart(g, inst.words);
      if (!chart.parsable()) {
        o.require(false, "instance " + std::to_string(i) + " unparsable");
        continue;
      }
      auto brute = brute_posterior(inst.forest);
      double mass = 0.0;
      double worst = 0.0;
      for (int s = 1; s <= n; ++s) {
        for (int t = s; t <= n; ++t) {
          for (std::size_t x = 0; x < g.nonterminal_count(); ++x) {
            const auto label = static_cast<Nonterminal>(x);
            auto it = brute.find({s, t, g.name(label)});
            const double want = it == brute.end() ? 0.0 : it->second;
            const double got = (*chart.posterior)(s, t, label);
            worst = std::max(worst, std::abs(got - want));
            mass += got;
          }
        }
      }
      const std::string tag = "instance " + std::to_string(i);
      o.require(worst <= kPosteriorTol, tag + ": posterior error " + format_prob(worst));
      o.require(std::abs(mass - (2 * n - 1)) <= kMassTol, tag + ": mass " + format_prob(mass));
      o.require(std::abs((*chart.posterior)(1, n, g.start()) - 1.0) <= kExactTol, tag + ": root posterior");
    }
    if (o.pass) o.detail = "posterior tol 1e-9, mass tol 1e-6, root tol 1e-12";
    return o;
  });

  run(6, "metric ordering, C = B on binary gold, self-evaluation", 0.0, [] {
    Outcome o;
    Rng rng(6);
    for (int i = 0; i < kMetricPairs; ++i) {
      const int n = 1 + static_cast<int>(rng() % 15);
      auto guessed = testing::random_binary_tree(rng, 1, n);
      auto gold = testing::random_binary_tree(rng, 1, n);
      for (int min_len : {1, 2}) {
        const auto c = evaluate_pair(guessed, gold, min_len).counts;
        const std::string tag = "pair " + std::to_string(i);
        o.require(0 <= c.labelled && c.labelled <= c.bracketed && c.bracketed <= c.consistent &&
                      c.consistent <= c.guessed,
                  tag + ": ordering");
        o.require(c.labelled <= c.correct && c.bracketed <= c.correct, tag + ": bounded by N_C");
        o.require(c.consistent == c.bracketed, tag + ": C != B");
      }
      for (const auto* t : {&guessed, &gold}) {
        const auto self = evaluate_pair(*t, *t).report;
        o.require(std::all_of(self.values.begin(), self.values.end(), [](double v) { return v == 1.0; }),
                  "self-evaluation below 1");
      }
    }
    if (o.pass) o.detail = std::to_string(kMetricPairs) + " pairs, span lengths >= 1 and >= 2";
    return o;
  });

  run(7, "each decoder best on its own metric (500 sampled sentences)", 300.0, [] {
    Outcome o;
    Grammar g = load_grammar_file(fs::path(MBRPARSE_DATA_DIR) / "english.grammar");
    Rng rng(7);
    auto gold = sample_corpus(g, kCorpusSize, 1, 15, rng);
    const std::vector<Objective> decoders{Objective::labelled_tree, Objective::labelled_recall,
                                          Objective::bracketed_recall};
    auto decoded = decode_corpus(g, sentences_of(gold), decoders, {}, 1);
    std::vector<MetricReport> reports;
    for (std::size_t d = 0; d < decoders.size(); ++d) {
      CorpusEvaluation corpus;
      for (std::size_t i = 0; i < gold.size(); ++i) corpus.add(evaluate_pair(decoded.results[d][i].tree, gold[i]));
      reports.push_back(corpus.report(Averaging::micro));
    }
    auto dominant = [&](std::size_t d, Metric m) {
      for (std::size_t e = 0; e < reports.size(); ++e) {
        if (reports[e][m] > reports[d][m]) return false;
      }
      return true;
    };
    o.require(dominant(0, Metric::labelled_tree), "labelled tree");
    o.require(dominant(1, Metric::labelled_recall), "labelled recall");
    o.require(dominant(2, Metric::bracketed_recall), "bracketed recall");
    o.detail += (o.detail.empty() ? "" : "; ");
    o.detail += "LT/LR/BR rates: ";
    for (std::size_t d = 0; d < 3; ++d) {
      if (d) o.detail += " | ";
      o.detail += percent(reports[d][Metric::labelled_tree]) + " " + percent(reports[d][Metric::labelled_recall]) +
                  " " + percent(reports[d][Metric::bracketed_recall]);
    }
    o.require(decoded.failures() == 0, "unparsable sampled sentences");
    return o;
  });

  run(8, "inside+outside+decode time ratio n=40 / n=20 in [5.5, 11]", 0.0, [] {
    Outcome o;
    Grammar g = scaling_grammar();
    const double t20 = median_seconds(g, 20);
    const double t40 = median_seconds(g, 40);
    const double ratio = t40 / t20;
    o.require(ratio >= kScalingLow && ratio <= kScalingHigh, "out of range");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("r = ") + std::to_string(g.rule_count()) +
                ", n=20 " + format_fixed(t20 * 1e3, 3) + " ms, n=40 " + format_fixed(t40 * 1e3, 3) +
                " ms, ratio " + format_fixed(ratio, 2);
    return o;
  });

  run(9, "binarization example, idempotence and yield preservation", 0.0, [] {
    Outcome o;
    auto flat = read_tree("(X (A a) (B b) (C c) (D d))");
    o.require(write_bracketed(binarize(flat)) == "(X (A a) (X_Cont (B b) (X_Cont (C c) (D d))))", "example");
    Rng rng(9);
    for (int i = 0; i < kBinarizeTrees; ++i) {
      auto raw = testing::random_raw_tree(rng);
      std::vector<std::string> words;
      for (const auto& w : yield(raw)) {
        if (w != "*T*") words.push_back(w);
      }
      auto once = binarize(raw);
      o.require(yield(once) == words, "yield changed");
      o.require(binarize(once) == once, "not idempotent");
      o.require(is_binarized(once), "not binary");
    }
    if (o.pass) o.detail = std::to_string(kBinarizeTrees) + " random trees";
    return o;
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
