#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mbrparse/cli.hpp"

namespace {

using namespace mbrparse;

struct CommonFlags {
  std::vector<std::string> decoders;
  std::size_t max_symbols = kDefaultMaxSymbols;
  std::string averaging = "micro";
  int spans_min_length = 1;
  std::uint64_t seed = 1;
  int threads = 1;

  void attach(CLI::App* cmd, bool with_decoders) {
    if (with_decoders) {
      cmd->add_option("--decoder", decoders,
                      "labelled-tree | labelled-recall | bracketed-recall (repeatable)");
    }
    cmd->add_option("--max-symbols", max_symbols, "skip treebank trees with more symbols (words + nodes)");
    cmd->add_option("--averaging", averaging, "micro | macro");
    cmd->add_option("--spans-min-length", spans_min_length, "1 counts preterminals, 2 ignores them");
    cmd->add_option("--seed", seed, "seed for all sampling");
    cmd->add_option("--threads", threads, "sentences decoded in parallel");
  }

  RunConfig config() const {
    RunConfig c;
    if (!decoders.empty()) {
      c.decoders.clear();
      for (const auto& d : decoders) c.decoders.push_back(parse_objective(d));
    }
    c.max_symbols = max_symbols;
    c.averaging = parse_averaging(averaging);
    c.spans_min_length = spans_min_length;
    c.seed = seed;
    c.threads = threads;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PCFG decoding for labelled-tree, labelled-recall and bracketed-recall objectives"};
  app.require_subcommand(1);
  int status = 0;

  // induce
  CommonFlags induce_flags;
  std::vector<std::string> induce_inputs;
  std::string induce_output;
  auto* induce = app.add_subcommand("induce", "induce a grammar by counting binarized treebank productions");
  induce->add_option("treebank", induce_inputs, "treebank files or directories")->required();
  induce->add_option("-o,--output", induce_output, "grammar file to write")->required();
  induce_flags.attach(induce, false);

  // parse
  CommonFlags parse_flags;
  std::string parse_grammar, parse_sentences, parse_treebank, parse_output = "-", parse_dump;
  auto* parse = app.add_subcommand("parse", "decode sentences with one or more decoders");
  parse->add_option("-g,--grammar", parse_grammar, "grammar file")->required();
  auto* sent_opt = parse->add_option("-s,--sentences", parse_sentences, "one tokenized sentence per line");
  auto* tb_opt = parse->add_option("-t,--treebank", parse_treebank, "take sentences from gold trees");
  sent_opt->excludes(tb_opt);
  parse->add_option("-o,--output", parse_output, "output trees ('-' for stdout); a prefix with several decoders");
  parse->add_option("--dump-charts", parse_dump, "write 's t X e f g' chart lines to this file");
  parse_flags.attach(parse, true);

  // evaluate
  CommonFlags eval_flags;
  std::vector<std::string> eval_guessed;
  std::string eval_gold, eval_format = "table", eval_per_sentence;
  auto* evaluate = app.add_subcommand("evaluate", "score guessed trees against a gold treebank");
  evaluate->add_option("guessed", eval_guessed, "guessed tree files")->required();
  evaluate->add_option("--gold", eval_gold, "gold treebank")->required();
  evaluate->add_option("--format", eval_format, "table | tsv");
  evaluate->add_option("--per-sentence", eval_per_sentence, "write per-sentence counts and metrics");
  eval_flags.attach(evaluate, false);

  // compare
  CommonFlags cmp_flags;
  std::vector<std::string> cmp_guessed;
  std::string cmp_gold, cmp_grammar;
  RepetitionPlan plan;
  auto* compare = app.add_subcommand("compare", "summary statistics and paired differences between systems");
  compare->add_option("guessed", cmp_guessed, "guessed tree files (first is the baseline)");
  compare->add_option("--gold", cmp_gold, "gold treebank");
  compare->add_option("--grammar", cmp_grammar, "source grammar for the repeated synthetic protocol");
  compare->add_option("--repeat", plan.repetitions, "runs of the synthetic protocol");
  compare->add_option("--train", plan.train_trees, "training trees per run");
  compare->add_option("--test", plan.test_trees, "test trees per run");
  compare->add_option("--min-words", plan.min_words, "shortest sampled sentence");
  compare->add_option("--max-words", plan.max_words, "longest sampled sentence");
  cmp_flags.attach(compare, true);

  // oracle
  CommonFlags oracle_flags;
  std::string oracle_grammar, oracle_sentence;
  bool oracle_random = false;
  RandomGrammarParams random_params;
  int oracle_length = 5;
  auto* oracle = app.add_subcommand("oracle", "brute-force enumeration next to the dynamic programs");
  oracle->add_option("-g,--grammar", oracle_grammar, "grammar file");
  oracle->add_option("sentence", oracle_sentence, "space-separated words");
  oracle->add_flag("--random", oracle_random, "random grammar and sentence from --seed");
  oracle->add_option("--nonterminals", random_params.nonterminals, "random grammar size");
  oracle->add_option("--length", oracle_length, "random sentence length");
  oracle_flags.attach(oracle, false);

  // sample
  CommonFlags sample_flags;
  std::string sample_grammar, sample_output = "-";
  std::size_t sample_count = 100;
  int sample_min = 1, sample_max = 15;
  auto* sample = app.add_subcommand("sample", "sample a bracketed treebank from a grammar");
  sample->add_option("-g,--grammar", sample_grammar, "grammar file")->required();
  sample->add_option("-n,--count", sample_count, "number of trees");
  sample->add_option("--min-words", sample_min, "shortest sentence");
  sample->add_option("--max-words", sample_max, "longest sentence");
  sample->add_option("-o,--output", sample_output, "output file ('-' for stdout)");
  sample_flags.attach(sample, false);

  CLI11_PARSE(app, argc, argv);

  auto config_of = [&](const CommonFlags& flags, RunConfig& out) {
    try {
      out = flags.config();
      return true;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return false;
    }
  };

  RunConfig config;
  if (*induce) {
    if (!config_of(induce_flags, config)) return 1;
    std::vector<fs::path> inputs(induce_inputs.begin(), induce_inputs.end());
    status = cmd_induce(inputs, induce_output, config, std::cout, std::cerr);
  } else if (*parse) {
    if (!config_of(parse_flags, config)) return 1;
    ParseInput input;
    if (!parse_sentences.empty()) input.sentences = parse_sentences;
    if (!parse_treebank.empty()) input.treebank = parse_treebank;
    std::optional<fs::path> dump;
    if (!parse_dump.empty()) dump = parse_dump;
    status = cmd_parse(parse_grammar, input, parse_output, config, dump, std::cout, std::cerr);
  } else if (*evaluate) {
    if (!config_of(eval_flags, config)) return 1;
    if (eval_format != "table" && eval_format != "tsv") {
      std::cerr << "error: --format must be table or tsv\n";
      return 1;
    }
    std::optional<fs::path> per_sentence;
    if (!eval_per_sentence.empty()) per_sentence = eval_per_sentence;
    std::vector<fs::path> guessed(eval_guessed.begin(), eval_guessed.end());
    status = cmd_evaluate(guessed, eval_gold, config,
                          eval_format == "tsv" ? ReportFormat::tsv : ReportFormat::table, per_sentence,
                          std::cout, std::cerr);
  } else if (*compare) {
    if (!config_of(cmp_flags, config)) return 1;
    if (!cmp_grammar.empty()) {
      if (cmp_flags.decoders.empty()) {
        config.decoders = {Objective::labelled_tree, Objective::labelled_recall, Objective::bracketed_recall};
      }
      status = cmd_compare_repeated(cmp_grammar, plan, config, std::cout, std::cerr);
    } else {
      if (cmp_gold.empty()) {
        std::cerr << "error: compare needs --gold with tree files, or --grammar for the repeated protocol\n";
        return 1;
      }
      std::vector<fs::path> guessed(cmp_guessed.begin(), cmp_guessed.end());
      status = cmd_compare(cmp_gold, guessed, config, std::cout, std::cerr);
    }
  } else if (*oracle) {
    if (!config_of(oracle_flags, config)) return 1;
    status = guarded(std::cerr, [&] {
      if (oracle_random) {
        Rng rng(config.seed);
        Grammar g = random_grammar(random_params, rng);
        auto tree = TreeSampler(g).sample_length(rng, oracle_length, oracle_length);
        if (!tree) throw Error("could not sample a sentence of the requested length");
        std::cout << write_grammar(g) << "sentence: " << write_bracketed(*tree) << "\n\n";
        return cmd_oracle(g, yield(*tree), config, std::cout, std::cerr);
      }
      if (oracle_grammar.empty() || oracle_sentence.empty()) {
        throw Error("oracle needs --grammar and a sentence, or --random");
      }
      std::istringstream in(oracle_sentence);
      Sentence words;
      for (std::string w; in >> w;) words.push_back(w);
      return cmd_oracle(load_grammar_file(oracle_grammar), words, config, std::cout, std::cerr);
    });
  } else if (*sample) {
    if (!config_of(sample_flags, config)) return 1;
    status = cmd_sample(sample_grammar, sample_count, sample_min, sample_max, sample_output, config, std::cout,
                        std::cerr);
  }
  return status;
}
