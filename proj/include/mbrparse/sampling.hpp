#pragma once

// Seeded generation of trees from a grammar and of random CNF grammars, for
// synthetic corpora and randomized tests.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mbrparse/common.hpp"
#include "mbrparse/grammar.hpp"
#include "mbrparse/tree.hpp"

namespace mbrparse {

using Rng = std::mt19937_64;

class TreeSampler {
 public:
  explicit TreeSampler(const Grammar& grammar) : grammar_(grammar), choices_(grammar.nonterminal_count()) {
    for (const auto& r : grammar.binary_rules()) {
      choices_[index(r.lhs)].push_back({r.prob, true, r.left, r.right, Terminal{}});
    }
    for (const auto& r : grammar.lexical_rules()) {
      choices_[index(r.lhs)].push_back({r.prob, false, Nonterminal{}, Nonterminal{}, r.word});
    }
  }

  // Top-down sample from the start symbol. Gives up (nullopt) once the yield
  // would exceed `max_words`.
  std::optional<ParseTree> sample(Rng& rng, int max_words) const {
    int words = 0;
    return expand(grammar_.start(), rng, words, max_words);
  }

  // Rejection-samples a tree whose yield has between min_words and max_words.
  std::optional<ParseTree> sample_length(Rng& rng, int min_words, int max_words, int attempts = 10000) const {
    for (int i = 0; i < attempts; ++i) {
      auto tree = sample(rng, max_words);
      if (!tree) continue;
      const auto n = static_cast<int>(yield(*tree).size());
      if (n >= min_words) return tree;
    }
    return std::nullopt;
  }

 private:
  struct Choice {
    double prob;
    bool binary;
    Nonterminal left, right;
    Terminal word;
  };

  std::optional<ParseTree> expand(Nonterminal x, Rng& rng, int& words, int max_words) const {
    const auto& options = choices_[index(x)];
    if (options.empty()) throw Error("nonterminal '" + grammar_.name(x) + "' has no rules to sample");
    double total = 0.0;
    for (const auto& c : options) total += c.prob;
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    const Choice* pick = &options.back();
    for (const auto& c : options) {
      if (u < c.prob) {
        pick = &c;
        break;
      }
      u -= c.prob;
    }
    if (!pick->binary) {
      if (++words > max_words) return std::nullopt;
      return ParseTree::preterminal(grammar_.name(x), grammar_.name(pick->word));
    }
    auto left = expand(pick->left, rng, words, max_words);
    if (!left) return std::nullopt;
    auto right = expand(pick->right, rng, words, max_words);
    if (!right) return std::nullopt;
    std::vector<ParseTree> kids;
    kids.push_back(std::move(*left));
    kids.push_back(std::move(*right));
    return ParseTree::node(grammar_.name(x), std::move(kids));
  }

  const Grammar& grammar_;
  std::vector<std::vector<Choice>> choices_;
};

inline std::vector<ParseTree> sample_corpus(const Grammar& grammar, std::size_t count, int min_words,
                                            int max_words, Rng& rng) {
  TreeSampler sampler(grammar);
  std::vector<ParseTree> trees;
  trees.reserve(count);
  while (trees.size() < count) {
    auto tree = sampler.sample_length(rng, min_words, max_words);
    if (!tree) throw Error("could not sample a tree of the requested length");
    trees.push_back(std::move(*tree));
  }
  return trees;
}

struct RandomGrammarParams {
  int nonterminals = 4;     // k
  int terminals = 3;
  int max_rules = 25;
  int max_lexical_per_symbol = 2;
  // Share of each nonterminal's mass on lexical rules. Above 0.5 keeps the
  // expected tree size finite.
  double min_lexical_mass = 0.55;
  double max_lexical_mass = 0.85;
};

// Nonterminals N0..N{k-1} (N0 is the start), terminals w0..w{m-1}. Every
// nonterminal gets at least one lexical and one binary rule while the rule
// budget allows.
inline Grammar random_grammar(const RandomGrammarParams& params, Rng& rng) {
  const int k = params.nonterminals;
  const int m = params.terminals;
  if (k < 1 || m < 1) throw Error("random grammar needs at least one nonterminal and one terminal");
  if (params.max_rules < 2 * k) throw Error("rule budget too small for the requested nonterminals");

  auto nt = [](int i) { return "N" + std::to_string(i); };
  auto word = [](int i) { return "w" + std::to_string(i); };
  std::uniform_int_distribution<int> pick_nt(0, k - 1);
  std::uniform_int_distribution<int> pick_word(0, m - 1);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  std::uniform_real_distribution<double> lexical_mass(params.min_lexical_mass, params.max_lexical_mass);

  std::vector<int> lexical(k), binary(k, 1);
  int budget = params.max_rules - k;  // one binary rule each is reserved
  for (int i = 0; i < k; ++i) {
    lexical[i] = std::uniform_int_distribution<int>(1, std::min(params.max_lexical_per_symbol, m))(rng);
    budget -= lexical[i];
  }
  while (budget < 0) {
    for (int i = 0; i < k && budget < 0; ++i) {
      if (lexical[i] > 1) {
        --lexical[i];
        ++budget;
      }
    }
  }
  while (budget > 0) {
    ++binary[pick_nt(rng)];
    --budget;
  }

  GrammarBuilder builder;
  builder.set_start(nt(0));
  for (int i = 0; i < k; ++i) {
    const double mass = lexical_mass(rng);

    std::vector<int> words(m);
    for (int j = 0; j < m; ++j) words[j] = j;
    std::shuffle(words.begin(), words.end(), rng);
    std::vector<double> lw(lexical[i]);
    double lsum = 0.0;
    for (auto& w : lw) lsum += (w = weight(rng));
    for (int j = 0; j < lexical[i]; ++j) builder.add_lexical(nt(i), word(words[j]), mass * lw[j] / lsum);

    // Distinct right-hand sides, so the rule count is exact after merging.
    std::vector<std::pair<int, int>> rhs;
    while (static_cast<int>(rhs.size()) < std::min(binary[i], k * k)) {
      std::pair<int, int> p{pick_nt(rng), pick_nt(rng)};
      if (std::find(rhs.begin(), rhs.end(), p) == rhs.end()) rhs.push_back(p);
    }
    std::vector<double> bw(rhs.size());
    double bsum = 0.0;
    for (auto& w : bw) bsum += (w = weight(rng));
    for (std::size_t j = 0; j < rhs.size(); ++j) {
      builder.add_binary(nt(i), nt(rhs[j].first), nt(rhs[j].second), (1.0 - mass) * bw[j] / bsum);
    }
  }
  return builder.build();
}

}  // namespace mbrparse
