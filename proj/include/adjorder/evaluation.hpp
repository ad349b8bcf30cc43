#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "adjorder/embeddings.hpp"
#include "adjorder/model.hpp"
#include "adjorder/phrase.hpp"

namespace adjorder {

struct EvalReport {
  std::vector<bool> correct;
  double accuracy = 0.0;
  double random_baseline = 0.0;
  std::size_t n = 0;
  std::size_t ties = 0;  // phrases whose prediction went through a tie-break
};

struct SignificanceResult {
  double p_value = 1.0;
  double observed_diff = 0.0;
  int permutations = 0;
  double alpha = 0.05;

  bool significant() const { return p_value < alpha; }
};

// A phrase is correct when every side reproduces its surface order.
EvalReport evaluate(const std::vector<Phrase>& test, const EmbeddingTables& tables, const Params& params);

// Expected accuracy of ordering each side uniformly at random:
// mean over phrases of the product of 1 / (side length)!.
double random_baseline(const std::vector<Phrase>& test);

// Per-phrase correctness of a uniformly random orderer.
std::vector<bool> random_orderer_correctness(const std::vector<Phrase>& test, std::uint64_t seed);

// Paired sign-flip test on per-item correctness. Each round swaps every pair
// with probability 1/2; p = (#{|stat| >= |observed|} + 1) / (rounds + 1).
SignificanceResult paired_permutation_test(const std::vector<bool>& a, const std::vector<bool>& b,
                                           int permutations = 10000, std::uint64_t seed = 0,
                                           double alpha = 0.05);

struct ClassEntry {
  std::string adjective;
  int cls = 1;  // 1-based argmax class, lowest index on ties
  std::vector<double> posterior;
};

struct ClassReport {
  std::vector<ClassEntry> entries;  // sorted by class, then adjective
  std::vector<std::string> skipped;
};

ClassReport class_report(const std::vector<std::string>& adjectives, const EmbeddingTable& table,
                         const Params& params);

// The `count` most frequent adjective forms (both sides), frequency then form.
std::vector<std::string> most_common_adjectives(const std::vector<Phrase>& phrases, std::size_t count);

using AdjectivePair = std::pair<std::string, std::string>;

// "first<TAB>second" per line; '#' starts a comment line.
std::vector<AdjectivePair> read_pairs(std::istream& in);
std::vector<AdjectivePair> read_pairs_file(const std::string& path);

struct PairsResult {
  double accuracy = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::vector<bool> correct;
};

// Fraction of pairs for which the predicted prenominal order puts `first`
// before `second`. Pairs with an unknown word are skipped.
PairsResult evaluate_pairs(const std::vector<AdjectivePair>& pairs, const EmbeddingTable& table,
                           const Params& params);

std::string to_json(const EvalReport& report);
std::string to_json(const SignificanceResult& result);
EvalReport eval_report_from_json(const std::string& text);

}  // namespace adjorder
