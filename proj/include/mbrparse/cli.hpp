#pragma once

// Subcommand implementations behind the mbrparse tool. Each returns a process
// exit status and writes human output to `out`, diagnostics to `err`.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mbrparse/chart.hpp"
#include "mbrparse/corpus.hpp"
#include "mbrparse/decoders.hpp"
#include "mbrparse/grammar.hpp"
#include "mbrparse/metrics.hpp"
#include "mbrparse/oracle.hpp"
#include "mbrparse/sampling.hpp"
#include "mbrparse/tree.hpp"

namespace mbrparse {

namespace fs = std::filesystem;

struct RunConfig {
  std::vector<Objective> decoders{Objective::labelled_recall};
  std::size_t max_symbols = kDefaultMaxSymbols;
  Averaging averaging = Averaging::micro;
  int spans_min_length = 1;
  std::uint64_t seed = 1;
  int threads = 1;

  void check() const {
    if (decoders.empty()) throw Error("at least one decoder is required");
    if (max_symbols < 2) throw Error("--max-symbols must be at least 2");
    if (spans_min_length != 1 && spans_min_length != 2) throw Error("--spans-min-length must be 1 or 2");
    if (threads < 1) throw Error("--threads must be positive");
  }

  DecodeOptions decode_options() const { return {spans_min_length}; }
};

// ---------------------------------------------------------------------------
// Corpus decoding

struct CorpusDecode {
  // results[d][i]: decoder d on sentence i.
  std::vector<std::vector<DecodeResult>> results;
  std::vector<char> unparsable;  // not vector<bool>: written from several threads
  std::vector<std::string> chart_dumps;  // filled only when requested

  std::size_t failures() const { return static_cast<std::size_t>(std::count(unparsable.begin(), unparsable.end(), 1)); }
};

// Output order always equals input order, whatever the thread count.
inline CorpusDecode decode_corpus(const Grammar& grammar, const std::vector<Sentence>& sentences,
                                  const std::vector<Objective>& decoders, DecodeOptions options,
                                  int threads = 1, bool dump_charts = false) {
  CorpusDecode out;
  out.results.assign(decoders.size(), std::vector<DecodeResult>(sentences.size()));
  out.unparsable.assign(sentences.size(), 0);
  if (dump_charts) out.chart_dumps.assign(sentences.size(), {});

  const bool need_chart =
      dump_charts || std::any_of(decoders.begin(), decoders.end(), [](Objective o) {
        return o == Objective::labelled_recall || o == Objective::bracketed_recall;
      });

  auto work = [&](std::size_t i) {
    const auto& words = sentences[i];
    std::optional<Chart> chart;
    if (need_chart) chart = build_chart(grammar, words);
    if (dump_charts) {
      std::ostringstream dump;
      dump_chart(dump, grammar, *chart);
      out.chart_dumps[i] = dump.str();
    }
    for (std::size_t d = 0; d < decoders.size(); ++d) {
      out.results[d][i] = decode(grammar, words, decoders[d], options, chart ? &*chart : nullptr);
    }
    out.unparsable[i] = out.results.front()[i].objective == Objective::fallback;
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < sentences.size();) {
      try {
        work(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline std::vector<Sentence> sentences_of(const std::vector<ParseTree>& trees) {
  std::vector<Sentence> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(yield(t));
  return out;
}

// ---------------------------------------------------------------------------
// Reporting helpers

inline std::string percent(double rate) { return format_fixed(100.0 * rate, 2) + "%"; }

inline void print_report_table(std::ostream& out, const std::vector<std::string>& names,
                               const std::vector<MetricReport>& reports) {
  std::size_t width = 9;
  for (const auto& n : names) width = std::max(width, n.size());
  out << std::left << std::setw(static_cast<int>(width)) << "Algorithm";
  for (Metric m : kAllMetrics) out << "  " << std::right << std::setw(17) << metric_title(m);
  out << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(width)) << names[i];
    for (Metric m : kAllMetrics) out << "  " << std::right << std::setw(17) << percent(reports[i][m]);
    out << '\n';
  }
  out << std::left;
}

inline void print_summary_block(std::ostream& out, const std::string& title,
                                const std::array<Summary, 6>& summaries,
                                const std::array<PairedSummary, 6>* paired = nullptr) {
  out << "== " << title << " ==\n";
  out << std::left << std::setw(28) << "Criterion" << std::right << std::setw(9) << "Min" << std::setw(9)
      << "Max" << std::setw(9) << "Mean" << std::setw(9) << "SDev";
  if (paired) out << std::setw(10) << "t";
  out << '\n';
  for (Metric m : kAllMetrics) {
    const auto& s = summaries[static_cast<std::size_t>(m)];
    out << std::left << std::setw(28) << metric_title(m) << std::right << std::setw(9)
        << format_fixed(100 * s.min, 2) << std::setw(9) << format_fixed(100 * s.max, 2) << std::setw(9)
        << format_fixed(100 * s.mean, 2) << std::setw(9) << format_fixed(100 * s.stdev, 2);
    if (paired) {
      const auto& p = (*paired)[static_cast<std::size_t>(m)];
      out << std::setw(10) << (p.t_defined ? format_fixed(p.t_statistic, 3) : std::string("n/a"));
    }
    out << '\n';
  }
  out << std::left;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline Grammar load_grammar_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open grammar file " + path.string());
  try {
    return read_grammar(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------
// induce

inline int cmd_induce(const std::vector<fs::path>& treebanks, const fs::path& output, const RunConfig& config,
                      std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.check();
    auto prepared = prepare_treebank(load_treebank(treebanks), config.max_symbols);
    if (prepared.trees.empty()) throw Error("treebank is empty after preprocessing");
    Grammar grammar = induce_by_counting(prepared.trees);
    {
      auto file = open_output(output);
      write_grammar(file, grammar);
      if (!file) throw Error("failed writing " + output.string());
    }
    out << "trees: " << prepared.trees.size() << "\n"
        << "skipped: " << prepared.skipped << "\n"
        << "rules: " << grammar.rule_count() << "\n"
        << "nonterminals: " << grammar.nonterminal_count() << "\n";
    return 0;
  });
}

// ---------------------------------------------------------------------------
// parse

struct ParseInput {
  std::optional<fs::path> sentences;  // one tokenized sentence per line
  std::optional<fs::path> treebank;   // gold trees supply the sentences
};

// With one decoder, trees go to `output` ("-" for `out`). With several,
// `output` is a prefix and each decoder writes `<output>.<decoder>`.
inline int cmd_parse(const fs::path& grammar_path, const ParseInput& input, const fs::path& output,
                     const RunConfig& config, const std::optional<fs::path>& dump_charts, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    config.check();
    Grammar grammar = load_grammar_file(grammar_path);
    std::vector<Sentence> sentences;
    if (input.sentences) {
      sentences = read_sentences_file(*input.sentences);
    } else if (input.treebank) {
      sentences = sentences_of(prepare_treebank(load_treebank({*input.treebank}), config.max_symbols).trees);
    } else {
      throw Error("no input: give a sentence file or a treebank");
    }

    auto decoded = decode_corpus(grammar, sentences, config.decoders, config.decode_options(), config.threads,
                                 dump_charts.has_value());

    for (std::size_t d = 0; d < config.decoders.size(); ++d) {
      std::ostringstream trees;
      for (const auto& r : decoded.results[d]) trees << write_bracketed(r.tree) << '\n';
      if (config.decoders.size() == 1 && output == "-") {
        out << trees.str();
        continue;
      }
      fs::path target = output;
      if (config.decoders.size() > 1) target += "." + std::string(objective_name(config.decoders[d]));
      auto file = open_output(target);
      file << trees.str();
    }
    if (dump_charts) {
      auto file = open_output(*dump_charts);
      for (std::size_t i = 0; i < decoded.chart_dumps.size(); ++i) {
        file << "# sentence " << i + 1 << '\n' << decoded.chart_dumps[i];
      }
    }

    const double pct = sentences.empty() ? 0.0 : static_cast<double>(decoded.failures()) / sentences.size();
    err << "sentences: " << sentences.size() << "  unparsable: " << decoded.failures() << " ("
        << percent(pct) << ")\n";
    return 0;
  });
}

// ---------------------------------------------------------------------------
// evaluate

enum class ReportFormat { table, tsv };

struct SystemEvaluation {
  std::string name;
  std::vector<PairEvaluation> sentences;
  CorpusEvaluation corpus;
};

inline SystemEvaluation evaluate_system(const std::string& name, const std::vector<ParseTree>& guessed,
                                        const std::vector<ParseTree>& gold, int min_span_length) {
  if (guessed.size() != gold.size()) {
    throw Error(name + ": " + std::to_string(guessed.size()) + " guessed trees but " +
                std::to_string(gold.size()) + " gold trees");
  }
  SystemEvaluation sys;
  sys.name = name;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    try {
      sys.sentences.push_back(evaluate_pair(to_constituents(guessed[i]), to_constituents(gold[i]), min_span_length));
    } catch (const Error& e) {
      throw Error(name + ", sentence " + std::to_string(i + 1) + ": " + e.what());
    }
    sys.corpus.add(sys.sentences.back());
  }
  return sys;
}

inline std::vector<SystemEvaluation> evaluate_files(const std::vector<fs::path>& guessed, const fs::path& gold_path,
                                                    const RunConfig& config) {
  auto gold = prepare_treebank(load_treebank({gold_path}), config.max_symbols).trees;
  std::vector<SystemEvaluation> systems;
  for (const auto& g : guessed) {
    systems.push_back(evaluate_system(g.filename().string(), read_treebank_file(g), gold, config.spans_min_length));
  }
  return systems;
}

inline int cmd_evaluate(const std::vector<fs::path>& guessed, const fs::path& gold_path, const RunConfig& config,
                        ReportFormat format, const std::optional<fs::path>& per_sentence, std::ostream& out,
                        std::ostream& err) {
  return guarded(err, [&] {
    config.check();
    if (guessed.empty()) throw Error("no guessed tree files given");
    auto systems = evaluate_files(guessed, gold_path, config);

    if (per_sentence) {
      auto file = open_output(*per_sentence);
      file << "system\tsentence\tL\tB\tC\tN_G\tN_C";
      for (Metric m : kAllMetrics) file << '\t' << metric_name(m);
      file << '\n';
      for (const auto& sys : systems) {
        for (std::size_t i = 0; i < sys.sentences.size(); ++i) {
          const auto& e = sys.sentences[i];
          file << sys.name << '\t' << i + 1 << '\t' << e.counts.labelled << '\t' << e.counts.bracketed << '\t'
               << e.counts.consistent << '\t' << e.counts.guessed << '\t' << e.counts.correct;
          for (Metric m : kAllMetrics) file << '\t' << format_prob(e.report[m]);
          file << '\n';
        }
      }
    }

    if (format == ReportFormat::tsv) {
      for (const auto& sys : systems) {
        const std::string prefix = systems.size() > 1 ? sys.name + "\t" : "";
        const auto report = sys.corpus.report(config.averaging);
        out << prefix << "sentences\t" << sys.corpus.sentences() << '\n';
        for (Metric m : kAllMetrics) out << prefix << metric_name(m) << '\t' << format_prob(report[m]) << '\n';
      }
      return 0;
    }

    for (auto mode : {Averaging::micro, Averaging::macro}) {
      std::vector<std::string> names;
      std::vector<MetricReport> reports;
      for (const auto& sys : systems) {
        names.push_back(sys.name);
        reports.push_back(sys.corpus.report(mode));
      }
      out << (mode == Averaging::micro ? "micro-averaged" : "macro-averaged") << " over "
          << systems.front().corpus.sentences() << " sentences\n";
      print_report_table(out, names, reports);
      out << '\n';
    }
    for (const auto& sys : systems) {
      const auto& t = sys.corpus.totals();
      out << sys.name << ": L=" << t.labelled << " B=" << t.bracketed << " C=" << t.consistent
          << " N_G=" << t.guessed << " N_C=" << t.correct << '\n';
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------
// compare

inline std::vector<MetricReport> sentence_reports(const SystemEvaluation& sys) {
  std::vector<MetricReport> out;
  for (const auto& e : sys.sentences) out.push_back(e.report);
  return out;
}

// Per-item summaries for each system, and differences against the first.
inline void print_comparison(std::ostream& out, const std::vector<std::string>& names,
                             const std::vector<std::vector<MetricReport>>& items) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    print_summary_block(out, names[i], aggregate(items[i]).first);
  }
  for (std::size_t i = 1; i < names.size(); ++i) {
    auto report = aggregate(items[i], std::span<const MetricReport>(items[0]));
    std::array<Summary, 6> differences;
    for (std::size_t m = 0; m < 6; ++m) differences[m] = (*report.paired)[m].difference;
    print_summary_block(out, "Differences: " + names[i] + " - " + names[0], differences, &*report.paired);
  }
}

inline int cmd_compare(const fs::path& gold_path, const std::vector<fs::path>& guessed, const RunConfig& config,
                       std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.check();
    if (guessed.size() < 2) throw Error("compare needs at least two guessed tree files");
    auto systems = evaluate_files(guessed, gold_path, config);
    std::vector<std::string> names;
    std::vector<std::vector<MetricReport>> items;
    for (const auto& sys : systems) {
      names.push_back(sys.name);
      items.push_back(sentence_reports(sys));
    }
    out << "items: sentences (" << items.front().size() << ")\n";
    print_comparison(out, names, items);
    return 0;
  });
}

struct RepetitionPlan {
  int repetitions = 10;
  std::size_t train_trees = 500;
  std::size_t test_trees = 200;
  int min_words = 2;
  int max_words = 15;
};

struct RepetitionResult {
  // runs[r][d]: corpus report of decoder d in run r.
  std::vector<std::vector<MetricReport>> runs;
  std::vector<double> failure_rates;
};

// Each run samples a training and a test corpus from `source` with its own
// seed, induces a grammar by counting, decodes the test sentences and
// evaluates against the sampled trees.
inline RepetitionResult run_repetitions(const Grammar& source, const RepetitionPlan& plan, const RunConfig& config) {
  RepetitionResult result;
  for (int run = 0; run < plan.repetitions; ++run) {
    Rng rng(config.seed + static_cast<std::uint64_t>(run));
    auto train = sample_corpus(source, plan.train_trees, plan.min_words, plan.max_words, rng);
    auto test = sample_corpus(source, plan.test_trees, plan.min_words, plan.max_words, rng);
    Grammar induced = induce_by_counting(train);
    auto decoded = decode_corpus(induced, sentences_of(test), config.decoders, config.decode_options(), config.threads);

    std::vector<MetricReport> row;
    for (std::size_t d = 0; d < config.decoders.size(); ++d) {
      CorpusEvaluation corpus;
      for (std::size_t i = 0; i < test.size(); ++i) {
        corpus.add(evaluate_pair(to_constituents(decoded.results[d][i].tree), to_constituents(test[i]),
                                 config.spans_min_length));
      }
      row.push_back(corpus.report(config.averaging));
    }
    result.runs.push_back(std::move(row));
    result.failure_rates.push_back(static_cast<double>(decoded.failures()) / test.size());
  }
  return result;
}

inline int cmd_compare_repeated(const fs::path& grammar_path, const RepetitionPlan& plan, const RunConfig& config,
                                std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.check();
    if (plan.repetitions < 1) throw Error("--repeat must be positive");
    Grammar source = load_grammar_file(grammar_path);
    auto result = run_repetitions(source, plan, config);

    std::vector<std::string> names;
    for (auto d : config.decoders) names.emplace_back(objective_name(d));
    for (int run = 0; run < plan.repetitions; ++run) {
      out << "run " << run + 1 << " (seed " << config.seed + run << ", unparsable "
          << percent(result.failure_rates[run]) << ")\n";
      print_report_table(out, names, result.runs[run]);
    }
    out << '\n';
    std::vector<std::vector<MetricReport>> items(config.decoders.size());
    for (const auto& row : result.runs) {
      for (std::size_t d = 0; d < row.size(); ++d) items[d].push_back(row[d]);
    }
    out << "items: runs (" << plan.repetitions << ")\n";
    print_comparison(out, names, items);
    return 0;
  });
}

// ---------------------------------------------------------------------------
// oracle

inline int cmd_oracle(const Grammar& grammar, const Sentence& words, const RunConfig& config, std::ostream& out,
                      std::ostream& err) {
  return guarded(err, [&] {
    config.check();
    if (words.empty()) throw Error("empty sentence");
    const int n = static_cast<int>(words.size());
    const int min_len = config.spans_min_length;

    auto forest = enumerate_parses(grammar, words);
    out << "parses: " << forest.trees.size() << "  total probability: " << format_prob(forest.total_probability())
        << '\n';
    for (const auto& p : forest.trees) out << "  " << format_prob(p.probability) << "  " << write_bracketed(p.tree) << '\n';
    if (forest.trees.empty()) {
      out << "unparsable; fallback tree: " << write_bracketed(fallback_parse(words).tree) << '\n';
      return 0;
    }

    Chart chart = build_chart(grammar, words);
    auto brute = brute_posterior(forest);
    out << "posteriors (brute force vs chart):\n";
    for (const auto& [c, p] : brute) {
      double g = 0.0;
      if (auto x = grammar.find_nonterminal(c.label)) g = (*chart.posterior)(c.start, c.end, *x);
      out << "  (" << c.start << ", " << c.end << ", " << c.label << ")  " << format_fixed(p, 6) << "  "
          << format_fixed(g, 6) << '\n';
    }

    auto report = [&](const char* name, RecallObjective brute_objective, Objective objective) {
      auto best = brute_best_recall_tree(brute, n, brute_objective, min_len);
      auto dp = recall_decode(grammar, *chart.posterior, words, objective, {min_len});
      out << name << ": brute force " << format_fixed(best.score, 6) << ", dynamic program "
          << format_fixed(dp.expected_score, 6) << "  " << write_bracketed(dp.tree) << '\n';
    };
    report("labelled recall", RecallObjective::labelled, Objective::labelled_recall);
    report("bracketed recall", RecallObjective::bracketed, Objective::bracketed_recall);

    auto viterbi = viterbi_parse(grammar, words);
    double best_prob = 0.0;
    for (const auto& p : forest.trees) best_prob = std::max(best_prob, p.probability);
    const double expected =
        expected_labelled_score(grammar, *chart.posterior, to_constituents(viterbi->tree), min_len);
    out << "labelled tree: probability " << format_prob(viterbi->expected_score) << " (brute force max "
        << format_prob(best_prob) << "), expected labelled score " << format_fixed(expected, 6) << "  "
        << write_bracketed(viterbi->tree) << '\n';
    return 0;
  });
}

// ---------------------------------------------------------------------------
// sample

inline int cmd_sample(const fs::path& grammar_path, std::size_t count, int min_words, int max_words,
                      const fs::path& output, const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (min_words < 1 || max_words < min_words) throw Error("invalid sentence length range");
    Grammar grammar = load_grammar_file(grammar_path);
    Rng rng(config.seed);
    auto trees = sample_corpus(grammar, count, min_words, max_words, rng);
    std::ostringstream text;
    for (const auto& t : trees) text << write_bracketed(t) << '\n';
    if (output == "-") {
      out << text.str();
    } else {
      auto file = open_output(output);
      file << text.str();
    }
    return 0;
  });
}

}  // namespace mbrparse
