#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adjorder/conllu.hpp"
#include "adjorder/dataset.hpp"
#include "adjorder/embeddings.hpp"
#include "adjorder/evaluation.hpp"
#include "adjorder/model.hpp"
#include "adjorder/training.hpp"

namespace adjorder {

enum class ScenarioKind { english_token, english_type, mono, transfer, joint, additional };

std::string scenario_kind_name(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);

// How each language's corpus is cut. The same settings applied to the same
// corpus always give the same split, so every scenario that tests on a
// language sees the identical test set.
struct LanguageSplitConfig {
  std::optional<std::size_t> sample;  // cap the corpus first (uniform sample)
  std::size_t dev_count = 0;
  double train = 0.9;  // fraction or count, see SplitSpec
  std::uint64_t seed = 0;
};

struct ScenarioSpec {
  std::string name;
  ScenarioKind kind = ScenarioKind::mono;
  std::vector<std::string> train_languages;
  // Exactly one language except for `additional`, which may list several.
  std::vector<std::string> test_languages;
  Variant variant = Variant::MF;
  LanguageSplitConfig split;
  ModelConfig model;
  TrainConfig train;
  int permutations = 10000;
  std::uint64_t significance_seed = 0;
  // Round-robin across languages instead of one global shuffle.
  bool interleave_languages = false;
};

// Throws before any work when the language lists contradict the kind.
void validate_scenario(const ScenarioSpec& spec);

using Corpora = std::map<std::string, std::vector<Phrase>>;

DatasetSplit language_split(const std::vector<Phrase>& corpus, const LanguageSplitConfig& config,
                            SplitMode mode);

struct LanguageResult {
  std::string language;
  EvalReport report;
  SignificanceResult vs_random;
  std::string test_digest;  // SHA-256 of the serialized test set
  std::vector<Phrase> test;
};

struct ScenarioResult {
  ScenarioSpec spec;
  Params params;
  TrainReport train_report;
  std::vector<LanguageResult> results;
};

// Builds the training pool, trains, and evaluates on each test language.
// Corpora must already be restricted to in-vocabulary phrases.
ScenarioResult run_scenario(const ScenarioSpec& spec, const Corpora& corpora, const EmbeddingTables& tables);

// Writes model.json, metrics.jsonl, report.json, manifest.json and one
// test_<lang>.jsonl per test language under `dir`.
void write_scenario_outputs(const std::string& dir, const ScenarioResult& result,
                            const std::map<std::string, std::string>& embedding_paths,
                            const std::map<std::string, std::string>& input_digests);

struct Comparison {
  std::string first;
  std::string second;
  std::string language;
};

struct ComparisonResult {
  Comparison comparison;
  SignificanceResult result;
};

// Paired test between two runs on one language. Throws when the two runs
// did not evaluate the byte-identical test set.
ComparisonResult compare_runs(const ScenarioResult& first, const ScenarioResult& second,
                              const std::string& language, int permutations, std::uint64_t seed);

// Scenario manifest (JSON):
//   {
//     "out_dir": "runs",
//     "languages": {"en": {"corpus": "en.conllu|en.jsonl", "embeddings": "en.vec"}, ...},
//     "extraction": {...}, "defaults": {...},
//     "runs": [{"name": ..., "kind": ..., "train_languages": [...], "test_language": ...}],
//     "comparisons": [["run_a", "run_b", "lang"], ...]
//   }
struct ScenarioMatrix {
  std::string out_dir;
  std::map<std::string, std::string> corpus_paths;
  std::map<std::string, std::string> embedding_paths;
  std::optional<std::size_t> embedding_limit;
  ExtractionConfig extraction;
  std::vector<ScenarioSpec> runs;
  // Runs without an explicit model dimension; they take the tables' dimension.
  std::set<std::string> inferred_dim;
  std::vector<Comparison> comparisons;
};

// Relative paths are resolved against `base_dir`.
ScenarioMatrix parse_scenario_matrix(const std::string& json_text, const std::string& base_dir = "");

struct MatrixResult {
  std::vector<ScenarioResult> runs;
  std::vector<ComparisonResult> comparisons;
};

// Loads every corpus and table, runs all scenarios, writes their outputs,
// and writes comparisons.json under out_dir.
MatrixResult run_scenario_matrix(const ScenarioMatrix& matrix);

}  // namespace adjorder
