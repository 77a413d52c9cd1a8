#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "mbrparse/chart.hpp"
#include "mbrparse/grammar.hpp"
#include "mbrparse/sampling.hpp"
#include "test_support.hpp"

namespace mbrparse {
namespace {

TEST(Validate, ToyGrammarIsClean) {
  EXPECT_TRUE(validate(testing::toy_grammar()).empty());
}

TEST(Validate, ReportsBadSum) {
  GrammarBuilder b;
  b.set_start("S").add_binary("S", "A", "C", 0.5).add_lexical("A", "a", 1.0).add_lexical("C", "c", 1.0);
  auto report = validate(b.build());
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0], "S sums to 0.5");
}

TEST(Validate, MergesDuplicates) {
  GrammarBuilder b;
  b.set_start("S")
      .add_binary("S", "A", "C", 0.1)
      .add_binary("S", "A", "C", 0.15)
      .add_binary("S", "A", "A", 0.75)
      .add_lexical("A", "a", 1.0)
      .add_lexical("C", "c", 1.0);
  Grammar g = b.build();
  auto rules = lookup_binary(g, "S");
  ASSERT_EQ(rules.size(), 2u);
  // A was interned before C, so S -> A A sorts first.
  EXPECT_EQ(rules[1].left, "A");
  EXPECT_EQ(rules[1].right, "C");
  EXPECT_DOUBLE_EQ(rules[1].prob, 0.25);
  EXPECT_TRUE(validate(g).empty());
}

TEST(Validate, ReportsStartWithoutRulesAndBadProbabilities) {
  GrammarBuilder b;
  b.set_start("S").add_lexical("A", "a", 1.5);
  auto report = validate(b.build());
  EXPECT_NE(std::find(report.begin(), report.end(), "start symbol S has no rules"), report.end());
  EXPECT_EQ(report.size(), 3u);  // start, range, sum
}

TEST(GrammarBuilder, DropsZeroProbabilityRules) {
  GrammarBuilder b;
  b.set_start("S").add_lexical("S", "a", 1.0).add_lexical("S", "b", 0.0);
  EXPECT_EQ(b.build().rule_count(), 1u);
  EXPECT_THROW(GrammarBuilder().add_lexical("S", "a", 1.0).build(), Error);
}

TEST(LookupBinary, ToyGrammar) {
  Grammar g = testing::toy_grammar();
  auto s = lookup_binary(g, "S");
  ASSERT_EQ(s.size(), 4u);
  std::vector<std::pair<std::string, std::string>> rhs;
  for (const auto& r : s) {
    rhs.emplace_back(r.left, r.right);
    EXPECT_DOUBLE_EQ(r.prob, 0.25);
  }
  // Sorted by interned ids (A, C, D, E, B, F in order of first mention).
  EXPECT_EQ(rhs, (std::vector<std::pair<std::string, std::string>>{{"A", "C"}, {"A", "D"}, {"E", "B"}, {"F", "B"}}));
  EXPECT_TRUE(lookup_binary(g, "X_x").empty());
  EXPECT_THROW(lookup_binary(g, "nope"), Error);
}

TEST(LookupBinary, LexicalOnlySymbolHasNoBinaryRules) {
  GrammarBuilder b;
  b.set_start("S").add_binary("S", "A", "A", 1.0).add_lexical("A", "x", 1.0);
  EXPECT_TRUE(lookup_binary(b.build(), "A").empty());
}

TEST(InduceByCounting, RelativeFrequencies) {
  std::vector<ParseTree> trees = {
      read_tree("(S (A a) (B b))"), read_tree("(S (A a) (B b))"),
      read_tree("(S (A a) (C c))"), read_tree("(S (A a) (C c))"),
  };
  auto rules = named_rules(induce_by_counting(trees));
  EXPECT_EQ(rules.start, "S");
  EXPECT_DOUBLE_EQ((rules.binary[{"S", "A", "B"}]), 0.5);
  EXPECT_DOUBLE_EQ((rules.binary[{"S", "A", "C"}]), 0.5);
  EXPECT_DOUBLE_EQ((rules.lexical[{"A", "a"}]), 1.0);
  EXPECT_DOUBLE_EQ((rules.lexical[{"B", "b"}]), 1.0);
  EXPECT_DOUBLE_EQ((rules.lexical[{"C", "c"}]), 1.0);
  EXPECT_EQ(rules.binary.size(), 2u);
  EXPECT_EQ(rules.lexical.size(), 3u);
}

TEST(InduceByCounting, SingleTree) {
  std::vector<ParseTree> trees = {read_tree("(S (A a) (A a))")};
  auto rules = named_rules(induce_by_counting(trees));
  EXPECT_EQ(rules.binary, (decltype(rules.binary){{{"S", "A", "A"}, 1.0}}));
  EXPECT_EQ(rules.lexical, (decltype(rules.lexical){{{"A", "a"}, 1.0}}));
}

TEST(InduceByCounting, ToyTreebankGivesToyGrammar) {
  auto trees = read_bracketed(
      "(S (A (X_x x) (X_x x)) (C (X_x x) (X_x x)))"
      "(S (A (X_x x) (X_x x)) (D (X_x x) (X_x x)))"
      "(S (E (X_x x) (X_x x)) (B (X_x x) (X_x x)))"
      "(S (F (X_x x) (X_x x)) (B (X_x x) (X_x x)))");
  EXPECT_EQ(named_rules(induce_by_counting(trees)), named_rules(testing::toy_grammar()));
}

TEST(InduceByCounting, Errors) {
  EXPECT_THROW(induce_by_counting(std::vector<ParseTree>{}), Error);
  std::vector<ParseTree> mixed = {read_tree("(S (A a) (B b))"), read_tree("(T (A a) (B b))")};
  EXPECT_THROW(induce_by_counting(mixed), Error);
  std::vector<ParseTree> ternary = {read_tree("(S (A a) (B b) (C c))")};
  EXPECT_THROW(induce_by_counting(ternary), Error);
}

TEST(InduceByCounting, PermutationInvariantAndValid) {
  Rng rng(11);
  RandomGrammarParams params;
  params.nonterminals = 5;
  Grammar source = random_grammar(params, rng);
  auto trees = sample_corpus(source, 60, 1, 8, rng);

  Grammar a = induce_by_counting(trees);
  std::shuffle(trees.begin(), trees.end(), rng);
  Grammar b = induce_by_counting(trees);
  EXPECT_EQ(named_rules(a), named_rules(b));
  EXPECT_EQ(write_grammar(a), write_grammar(b));
  EXPECT_TRUE(validate(a).empty());

  for (const auto& t : trees) {
    auto chart = compute_inside(a, yield(t));
    EXPECT_GT(chart.sentence_prob(), 0.0);
  }
}

TEST(InduceByCounting, RecoversSourceProbabilities) {
  GrammarBuilder b;
  b.set_start("S")
      .add_binary("S", "A", "B", 0.6)
      .add_binary("S", "B", "A", 0.4)
      .add_lexical("A", "a", 0.7)
      .add_lexical("A", "b", 0.3)
      .add_lexical("B", "b", 1.0);
  Grammar source = b.build();
  Rng rng(2024);
  auto trees = sample_corpus(source, 100, 1, 2, rng);
  auto induced = named_rules(induce_by_counting(trees));

  // Binomial standard errors at 100 draws (S) and 100 draws (A): <= 0.05.
  EXPECT_NEAR((induced.binary[{"S", "A", "B"}]), 0.6, 0.15);
  EXPECT_NEAR((induced.binary[{"S", "B", "A"}]), 0.4, 0.15);
  EXPECT_NEAR((induced.lexical[{"A", "a"}]), 0.7, 0.15);
  EXPECT_NEAR((induced.lexical[{"A", "b"}]), 0.3, 0.15);
  EXPECT_DOUBLE_EQ((induced.lexical[{"B", "b"}]), 1.0);
}

TEST(GrammarText, ReadsToyFormat) {
  Grammar g = read_grammar(
      "# toy\n"
      "start: S\n"
      "S -> A C 0.25\nS -> A D 0.25\nS -> E B 0.25\nS -> F B 0.25   # trailing comment\n"
      "A -> X_x X_x 1.0\nB -> X_x X_x 1.0\nC -> X_x X_x 1.0\nD -> X_x X_x 1.0\n"
      "E -> X_x X_x 1.0\nF -> X_x X_x 1.0\n\nX_x -> x 1.0\n");
  EXPECT_EQ(named_rules(g), named_rules(testing::toy_grammar()));
}

TEST(GrammarText, RoundTripIsIdentity) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    RandomGrammarParams params;
    params.nonterminals = 1 + i % 5;
    Grammar g = random_grammar(params, rng);
    Grammar again = read_grammar(write_grammar(g));
    EXPECT_EQ(named_rules(again), named_rules(g));  // exact doubles at 17 digits
    EXPECT_EQ(write_grammar(read_grammar(write_grammar(again))), write_grammar(again));
  }
}

TEST(GrammarText, Errors) {
  EXPECT_THROW(read_grammar("S -> a 1.0\n"), Error);                        // no start
  EXPECT_THROW(read_grammar("start: S\nS -> a b c 1.0\n"), Error);          // arity
  EXPECT_THROW(read_grammar("start: S\nS -> a x\n"), Error);                // probability
  EXPECT_THROW(read_grammar("start: S\nS => a 1.0\n"), Error);              // arrow
  try {
    read_grammar("start: S\nS -> a 1.0\nS a 1.0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

}  // namespace
}  // namespace mbrparse
