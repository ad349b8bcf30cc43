#include "adjorder/evaluation.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>

#include <json.hpp>

#include "adjorder/error.hpp"
#include "adjorder/rng.hpp"

namespace adjorder {

using nlohmann::json;

EvalReport evaluate(const std::vector<Phrase>& test, const EmbeddingTables& tables, const Params& params) {
  if (test.empty()) throw Error("cannot evaluate an empty test set");
  EvalReport report;
  report.correct.reserve(test.size());
  std::size_t hits = 0;
  for (const Phrase& phrase : test) {
    const OrderingPrediction pred = predict_order(phrase, tables, params);
    const bool ok = pred.left.adjectives == phrase.left && pred.right.adjectives == phrase.right;
    report.correct.push_back(ok);
    hits += ok;
    report.ties += pred.tied;
  }
  report.n = test.size();
  report.accuracy = static_cast<double>(hits) / static_cast<double>(report.n);
  report.random_baseline = random_baseline(test);
  return report;
}

double random_baseline(const std::vector<Phrase>& test) {
  if (test.empty()) throw Error("random baseline of an empty test set");
  const auto inv_factorial = [](std::size_t m) {
    double v = 1.0;
    for (std::size_t i = 2; i <= m; ++i) v /= static_cast<double>(i);
    return v;
  };
  // Summed per shape so the result does not depend on the order of `test`.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> shapes;
  for (const Phrase& p : test) ++shapes[{p.left.size(), p.right.size()}];
  double total = 0.0;
  for (const auto& [shape, count] : shapes)
    total += static_cast<double>(count) * inv_factorial(shape.first) * inv_factorial(shape.second);
  return total / static_cast<double>(test.size());
}

std::vector<bool> random_orderer_correctness(const std::vector<Phrase>& test, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<bool> out;
  out.reserve(test.size());
  for (const Phrase& p : test) {
    bool ok = true;
    for (const auto* side : {&p.left, &p.right}) {
      if (side->size() < 2) continue;
      std::vector<std::string> guess = *side;
      rng.shuffle(guess);
      ok = ok && guess == *side;
    }
    out.push_back(ok);
  }
  return out;
}

SignificanceResult paired_permutation_test(const std::vector<bool>& a, const std::vector<bool>& b,
                                           int permutations, std::uint64_t seed, double alpha) {
  if (a.size() != b.size()) throw Error("paired test needs equally long vectors");
  if (a.empty()) throw Error("paired test needs at least one item");
  if (permutations < 1) throw Error("paired test needs at least one permutation");

  std::vector<int> diff(a.size());
  long observed = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff[i] = int(a[i]) - int(b[i]);
    observed += diff[i];
  }

  Rng rng(seed);
  long extreme = 0;
  for (int round = 0; round < permutations; ++round) {
    long stat = 0;
    for (int d : diff) stat += rng.coin() ? -d : d;
    if (std::labs(stat) >= std::labs(observed)) ++extreme;
  }

  SignificanceResult result;
  result.observed_diff = static_cast<double>(observed) / static_cast<double>(a.size());
  result.permutations = permutations;
  result.alpha = alpha;
  result.p_value = static_cast<double>(extreme + 1) / static_cast<double>(permutations + 1);
  return result;
}

ClassReport class_report(const std::vector<std::string>& adjectives, const EmbeddingTable& table,
                         const Params& params) {
  ClassReport report;
  for (const std::string& adjective : adjectives) {
    const auto embedding = table.lookup(adjective);
    if (!embedding) {
      report.skipped.push_back(adjective);
      continue;
    }
    const Eigen::VectorXd posterior = class_posterior(*embedding, params);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < posterior.size(); ++k)
      if (posterior(k) > posterior(best)) best = k;
    report.entries.push_back(ClassEntry{adjective, static_cast<int>(best) + 1,
                                        std::vector<double>(posterior.data(), posterior.data() + posterior.size())});
  }
  std::stable_sort(report.entries.begin(), report.entries.end(), [](const ClassEntry& x, const ClassEntry& y) {
    return x.cls != y.cls ? x.cls < y.cls : x.adjective < y.adjective;
  });
  return report;
}

std::vector<std::string> most_common_adjectives(const std::vector<Phrase>& phrases, std::size_t count) {
  std::map<std::string, std::size_t> freq;
  for (const Phrase& p : phrases) {
    for (const std::string& a : p.left) ++freq[a];
    for (const std::string& a : p.right) ++freq[a];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < count; ++i) out.push_back(ranked[i].first);
  return out;
}

std::vector<AdjectivePair> read_pairs(std::istream& in) {
  std::vector<AdjectivePair> pairs;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos || tab == 0 ||
        tab + 1 == line.size())
      throw ParseError("expected \"first<TAB>second\"", line_number);
    pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return pairs;
}

std::vector<AdjectivePair> read_pairs_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_pairs(in);
}

PairsResult evaluate_pairs(const std::vector<AdjectivePair>& pairs, const EmbeddingTable& table,
                           const Params& params) {
  PairsResult result;
  std::size_t hits = 0;
  for (const auto& [first, second] : pairs) {
    if (!table.contains(first) || !table.contains(second)) {
      ++result.skipped;
      continue;
    }
    const SidePrediction pred = predict_side({first, second}, Side::left, table, params);
    const bool ok = pred.adjectives.front() == first;
    result.correct.push_back(ok);
    hits += ok;
    ++result.evaluated;
  }
  result.accuracy = result.evaluated == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(result.evaluated);
  return result;
}

std::string to_json(const EvalReport& report) {
  std::vector<int> correct(report.correct.begin(), report.correct.end());
  return json{{"accuracy", report.accuracy},
              {"random_baseline", report.random_baseline},
              {"n", report.n},
              {"ties", report.ties},
              {"correct", correct}}
      .dump();
}

std::string to_json(const SignificanceResult& result) {
  return json{{"p_value", result.p_value},
              {"observed_diff", result.observed_diff},
              {"permutations", result.permutations},
              {"alpha", result.alpha},
              {"significant", result.significant()}}
      .dump();
}

EvalReport eval_report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport report;
    report.accuracy = j.at("accuracy").get<double>();
    report.random_baseline = j.at("random_baseline").get<double>();
    report.n = j.at("n").get<std::size_t>();
    report.ties = j.value("ties", std::size_t{0});
    for (int c : j.at("correct").get<std::vector<int>>()) report.correct.push_back(c != 0);
    if (report.correct.size() != report.n) throw Error("report 'n' does not match its correctness vector");
    return report;
  } catch (const json::exception& e) {
    throw Error(std::string("bad evaluation report: ") + e.what());
  }
}

}  // namespace adjorder
