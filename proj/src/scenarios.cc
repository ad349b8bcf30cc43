#include "adjorder/scenarios.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "adjorder/digest.hpp"
#include "adjorder/error.hpp"
#include "adjorder/model_io.hpp"
#include "adjorder/rng.hpp"

namespace adjorder {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

bool contains(const std::vector<std::string>& list, const std::string& item) {
  return std::find(list.begin(), list.end(), item) != list.end();
}

std::string phrases_digest(const std::vector<Phrase>& phrases) {
  std::ostringstream out;
  write_phrases(out, phrases);
  return sha256_hex(out.str());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json split_to_json(const LanguageSplitConfig& s) {
  json j{{"dev_count", s.dev_count}, {"train", s.train}, {"seed", s.seed}};
  j["sample"] = s.sample ? json(*s.sample) : json(nullptr);
  return j;
}

json spec_to_json(const ScenarioSpec& spec) {
  const ModelConfig& m = spec.model;
  const TrainConfig& t = spec.train;
  return json{{"name", spec.name},
              {"kind", scenario_kind_name(spec.kind)},
              {"train_languages", spec.train_languages},
              {"test_languages", spec.test_languages},
              {"variant", variant_name(spec.variant)},
              {"split", split_to_json(spec.split)},
              {"model",
               {{"num_classes", m.num_classes},
                {"dim", m.dim},
                {"exact_side_limit", m.exact_side_limit},
                {"prune_top_m", m.prune_top_m}}},
              {"train",
               {{"learning_rate", t.learning_rate},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"seed", t.seed},
                {"init_scale", t.init_scale}}},
              {"permutations", spec.permutations},
              {"significance_seed", spec.significance_seed},
              {"interleave_languages", spec.interleave_languages}};
}

ScenarioSpec spec_from_json(const json& j) {
  ScenarioSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.kind = parse_scenario_kind(j.at("kind").get<std::string>());
  spec.train_languages = j.at("train_languages").get<std::vector<std::string>>();
  if (j.contains("test_languages"))
    spec.test_languages = j.at("test_languages").get<std::vector<std::string>>();
  else
    spec.test_languages = {j.at("test_language").get<std::string>()};
  spec.variant = parse_variant(j.value("variant", std::string("MF")));

  if (j.contains("split")) {
    const json& s = j.at("split");
    if (s.contains("sample") && !s.at("sample").is_null()) spec.split.sample = s.at("sample").get<std::size_t>();
    spec.split.dev_count = s.value("dev_count", spec.split.dev_count);
    spec.split.train = s.value("train", spec.split.train);
    spec.split.seed = s.value("seed", spec.split.seed);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    spec.model.num_classes = m.value("num_classes", spec.model.num_classes);
    spec.model.dim = m.value("dim", spec.model.dim);
    spec.model.exact_side_limit = m.value("exact_side_limit", spec.model.exact_side_limit);
    spec.model.prune_top_m = m.value("prune_top_m", spec.model.prune_top_m);
  }
  spec.model.w_mode = w_mode_of(spec.variant);
  if (j.contains("train")) {
    const json& t = j.at("train");
    spec.train.learning_rate = t.value("learning_rate", spec.train.learning_rate);
    spec.train.batch_size = t.value("batch_size", spec.train.batch_size);
    spec.train.epochs = t.value("epochs", spec.train.epochs);
    spec.train.seed = t.value("seed", spec.train.seed);
    spec.train.init_scale = t.value("init_scale", spec.train.init_scale);
  }
  spec.permutations = j.value("permutations", spec.permutations);
  spec.significance_seed = j.value("significance_seed", spec.significance_seed);
  spec.interleave_languages = j.value("interleave_languages", spec.interleave_languages);
  return spec;
}

// Round-robin over per-language pools, each shuffled first.
std::vector<Phrase> interleave(std::vector<std::vector<Phrase>> pools, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& pool : pools) rng.shuffle(pool);
  std::vector<Phrase> out;
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (const auto& pool : pools) {
      if (i < pool.size()) {
        out.push_back(pool[i]);
        any = true;
      }
    }
    if (!any) return out;
  }
}

std::vector<Phrase> scorable_only(std::vector<Phrase> phrases) {
  std::erase_if(phrases, [](const Phrase& p) { return !is_scorable(p); });
  return phrases;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).string();
}

}  // namespace

std::string scenario_kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::english_token: return "english_token";
    case ScenarioKind::english_type: return "english_type";
    case ScenarioKind::mono: return "mono";
    case ScenarioKind::transfer: return "transfer";
    case ScenarioKind::joint: return "joint";
    case ScenarioKind::additional: return "additional";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  for (ScenarioKind k : {ScenarioKind::english_token, ScenarioKind::english_type, ScenarioKind::mono,
                         ScenarioKind::transfer, ScenarioKind::joint, ScenarioKind::additional})
    if (scenario_kind_name(k) == name) return k;
  throw Error("unknown scenario kind '" + name + "'");
}

void validate_scenario(const ScenarioSpec& spec) {
  const std::string where = "scenario '" + spec.name + "': ";
  if (spec.train_languages.empty()) throw Error(where + "no training languages");
  if (spec.test_languages.empty()) throw Error(where + "no test language");
  if (std::set<std::string>(spec.train_languages.begin(), spec.train_languages.end()).size() !=
      spec.train_languages.size())
    throw Error(where + "training languages repeat");
  if (spec.kind != ScenarioKind::additional && spec.test_languages.size() != 1)
    throw Error(where + "exactly one test language expected");
  const std::string& test = spec.test_languages.front();

  switch (spec.kind) {
    case ScenarioKind::english_token:
    case ScenarioKind::english_type:
    case ScenarioKind::mono:
      if (spec.train_languages != std::vector<std::string>{test})
        throw Error(where + "must train on the test language only");
      break;
    case ScenarioKind::transfer:
      if (contains(spec.train_languages, test)) throw Error(where + "transfer must hold out the test language");
      break;
    case ScenarioKind::joint:
      if (!contains(spec.train_languages, test)) throw Error(where + "joint must train on the test language");
      break;
    case ScenarioKind::additional:
      for (const std::string& t : spec.test_languages)
        if (contains(spec.train_languages, t)) throw Error(where + "additional test language '" + t + "' was trained on");
      if (spec.variant != Variant::MF) throw Error(where + "additional-language runs use the MF variant");
      break;
  }
  if (spec.model.w_mode != w_mode_of(spec.variant))
    throw Error(where + "model w_mode disagrees with variant " + variant_name(spec.variant));
  spec.model.validate();
  spec.train.validate();
  if (spec.permutations < 1) throw Error(where + "permutations must be positive");
}

DatasetSplit language_split(const std::vector<Phrase>& corpus, const LanguageSplitConfig& config, SplitMode mode) {
  const std::vector<Phrase> pool = config.sample && *config.sample < corpus.size()
                                       ? sample_phrases(corpus, *config.sample, config.seed)
                                       : corpus;
  SplitSpec spec;
  spec.mode = mode;
  spec.train = config.train;
  spec.seed = config.seed;
  if (config.dev_count > 0) spec.dev_count = config.dev_count;
  return split_dataset(pool, spec);
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const Corpora& corpora, const EmbeddingTables& tables) {
  validate_scenario(spec);
  const auto corpus_of = [&](const std::string& lang) -> const std::vector<Phrase>& {
    const auto it = corpora.find(lang);
    if (it == corpora.end()) throw Error("scenario '" + spec.name + "': no corpus for language '" + lang + "'");
    table_for(tables, lang);
    return it->second;
  };
  const SplitMode mode = spec.kind == ScenarioKind::english_type ? SplitMode::type : SplitMode::token;

  std::vector<std::vector<Phrase>> pools;
  for (const std::string& lang : spec.train_languages)
    pools.push_back(apply_variant_sides(language_split(corpus_of(lang), spec.split, mode).train, spec.variant));

  TrainConfig train_config = spec.train;
  std::vector<Phrase> pool;
  if (spec.interleave_languages) {
    pool = interleave(std::move(pools), spec.train.seed);
    train_config.shuffle = false;
  } else {
    for (auto& p : pools) pool.insert(pool.end(), p.begin(), p.end());
  }

  ScenarioResult result;
  result.spec = spec;
  spdlog::info("scenario {}: training {} on {} phrases", spec.name, variant_name(spec.variant), pool.size());
  std::tie(result.params, result.train_report) = train(pool, tables, spec.model, train_config);

  for (const std::string& lang : spec.test_languages) {
    LanguageResult lr;
    lr.language = lang;
    const std::vector<Phrase>& corpus = corpus_of(lang);
    lr.test = scorable_only(apply_variant_sides(
        spec.kind == ScenarioKind::additional ? corpus : language_split(corpus, spec.split, mode).test, spec.variant));
    lr.test_digest = phrases_digest(lr.test);
    lr.report = evaluate(lr.test, tables, result.params);
    lr.vs_random = paired_permutation_test(lr.report.correct,
                                           random_orderer_correctness(lr.test, spec.significance_seed),
                                           spec.permutations, spec.significance_seed + 1);
    spdlog::info("scenario {}: {} accuracy {:.3f} (random {:.3f}, p={:.4g})", spec.name, lang, lr.report.accuracy,
                 lr.report.random_baseline, lr.vs_random.p_value);
    result.results.push_back(std::move(lr));
  }
  return result;
}

void write_scenario_outputs(const std::string& dir, const ScenarioResult& result,
                            const std::map<std::string, std::string>& embedding_paths,
                            const std::map<std::string, std::string>& input_digests) {
  const fs::path root(dir);
  fs::create_directories(root);

  ModelFile model{result.params, result.spec.variant, {}};
  for (const auto& lang : result.spec.train_languages)
    if (embedding_paths.count(lang)) model.embeddings[lang] = embedding_paths.at(lang);
  for (const auto& lang : result.spec.test_languages)
    if (embedding_paths.count(lang)) model.embeddings[lang] = embedding_paths.at(lang);
  write_model_file((root / "model.json").string(), model);

  {
    std::ofstream metrics(root / "metrics.jsonl", std::ios::binary);
    write_train_report(metrics, result.train_report, result.spec.train);
  }

  json report{{"name", result.spec.name},
              {"kind", scenario_kind_name(result.spec.kind)},
              {"variant", variant_name(result.spec.variant)},
              {"train",
               {{"used", result.train_report.used},
                {"skipped", result.train_report.skipped},
                {"params_digest", result.train_report.params_digest}}}};
  json results = json::array();
  for (const LanguageResult& lr : result.results) {
    write_phrases_file((root / ("test_" + lr.language + ".jsonl")).string(), lr.test);
    json entry = json::parse(to_json(lr.report));
    entry["language"] = lr.language;
    entry["test_digest"] = lr.test_digest;
    entry["vs_random"] = json::parse(to_json(lr.vs_random));
    results.push_back(std::move(entry));
  }
  report["results"] = std::move(results);
  write_text(root / "report.json", report.dump(1) + "\n");

  json manifest{{"scenario", spec_to_json(result.spec)},
                {"embeddings", embedding_paths},
                {"input_digests", input_digests}};
  write_text(root / "manifest.json", manifest.dump(1) + "\n");
}

ComparisonResult compare_runs(const ScenarioResult& first, const ScenarioResult& second, const std::string& language,
                              int permutations, std::uint64_t seed) {
  const auto find = [&](const ScenarioResult& r) -> const LanguageResult& {
    for (const LanguageResult& lr : r.results)
      if (lr.language == language) return lr;
    throw Error("run '" + r.spec.name + "' was not evaluated on '" + language + "'");
  };
  const LanguageResult& a = find(first);
  const LanguageResult& b = find(second);
  if (a.test_digest != b.test_digest)
    throw Error("runs '" + first.spec.name + "' and '" + second.spec.name + "' used different " + language +
                " test sets");
  return ComparisonResult{{first.spec.name, second.spec.name, language},
                          paired_permutation_test(a.report.correct, b.report.correct, permutations, seed)};
}

ScenarioMatrix parse_scenario_matrix(const std::string& json_text, const std::string& base_dir) {
  try {
    const json j = json::parse(json_text);
    ScenarioMatrix matrix;
    matrix.out_dir = resolve(j.value("out_dir", std::string()), base_dir);
    for (const auto& [lang, entry] : j.at("languages").items()) {
      matrix.corpus_paths[lang] = resolve(entry.at("corpus").get<std::string>(), base_dir);
      matrix.embedding_paths[lang] = resolve(entry.at("embeddings").get<std::string>(), base_dir);
    }
    if (j.contains("embedding_limit")) matrix.embedding_limit = j.at("embedding_limit").get<std::size_t>();
    if (j.contains("extraction")) {
      const json& e = j.at("extraction");
      ExtractionConfig& x = matrix.extraction;
      x.require_amod = e.value("require_amod", x.require_amod);
      x.min_side = e.value("min_side", x.min_side);
      x.max_total_adjectives = e.value("max_total_adjectives", x.max_total_adjectives);
      x.lowercase = e.value("lowercase", x.lowercase);
      x.drop_duplicate_adjectives = e.value("drop_duplicate_adjectives", x.drop_duplicate_adjectives);
      x.validate();
    }
    const json defaults = j.value("defaults", json::object());
    std::set<std::string> names;
    for (const json& run : j.at("runs")) {
      json merged = defaults;
      merged.merge_patch(run);
      ScenarioSpec spec = spec_from_json(merged);
      if (!names.insert(spec.name).second) throw Error("duplicate run name '" + spec.name + "'");
      if (!merged.contains("model") || !merged.at("model").contains("dim")) matrix.inferred_dim.insert(spec.name);
      validate_scenario(spec);
      matrix.runs.push_back(std::move(spec));
    }
    if (j.contains("comparisons"))
      for (const json& c : j.at("comparisons")) {
        const auto parts = c.get<std::vector<std::string>>();
        if (parts.size() != 3) throw Error("a comparison is [first_run, second_run, language]");
        if (!names.count(parts[0]) || !names.count(parts[1]))
          throw Error("comparison names an unknown run");
        matrix.comparisons.push_back({parts[0], parts[1], parts[2]});
      }
    return matrix;
  } catch (const json::exception& e) {
    throw Error(std::string("bad scenario manifest: ") + e.what());
  }
}

MatrixResult run_scenario_matrix(const ScenarioMatrix& matrix) {
  std::set<std::string> languages;
  for (const ScenarioSpec& spec : matrix.runs) {
    languages.insert(spec.train_languages.begin(), spec.train_languages.end());
    languages.insert(spec.test_languages.begin(), spec.test_languages.end());
  }

  EmbeddingTables tables;
  Corpora corpora;
  std::map<std::string, std::string> digests;
  for (const std::string& lang : languages) {
    if (!matrix.corpus_paths.count(lang) || !matrix.embedding_paths.count(lang))
      throw Error("manifest lacks corpus or embeddings for language '" + lang + "'");
    const std::string& emb_path = matrix.embedding_paths.at(lang);
    const std::string& corpus_path = matrix.corpus_paths.at(lang);
    tables.emplace(lang, load_embeddings_file(emb_path, lang, matrix.embedding_limit));
    std::vector<Phrase> phrases =
        fs::path(corpus_path).extension() == ".conllu"
            ? extract_phrases(parse_conllu_file(corpus_path), matrix.extraction, lang,
                              fs::path(corpus_path).filename().string())
            : read_phrases_file(corpus_path);
    corpora[lang] = filter_phrases_by_vocab(phrases, tables);
    digests["corpus:" + lang] = sha256_file(corpus_path);
    digests["embeddings:" + lang] = sha256_file(emb_path);
    spdlog::info("{}: {} phrases after vocabulary filtering ({} extracted)", lang, corpora[lang].size(), phrases.size());
  }

  MatrixResult out;
  for (ScenarioSpec spec : matrix.runs) {
    if (matrix.inferred_dim.count(spec.name)) spec.model.dim = tables.at(spec.train_languages.front()).dim();
    out.runs.push_back(run_scenario(spec, corpora, tables));
    if (!matrix.out_dir.empty())
      write_scenario_outputs((fs::path(matrix.out_dir) / spec.name).string(), out.runs.back(),
                             matrix.embedding_paths, digests);
  }

  const auto by_name = [&](const std::string& name) -> const ScenarioResult& {
    for (const ScenarioResult& r : out.runs)
      if (r.spec.name == name) return r;
    throw Error("unknown run '" + name + "'");
  };
  json comparisons = json::array();
  for (const Comparison& c : matrix.comparisons) {
    const ScenarioResult& first = by_name(c.first);
    out.comparisons.push_back(
        compare_runs(first, by_name(c.second), c.language, first.spec.permutations, first.spec.significance_seed));
    json entry = json::parse(to_json(out.comparisons.back().result));
    entry["first"] = c.first;
    entry["second"] = c.second;
    entry["language"] = c.language;
    comparisons.push_back(std::move(entry));
  }
  if (!matrix.out_dir.empty()) {
    fs::create_directories(matrix.out_dir);
    write_text(fs::path(matrix.out_dir) / "comparisons.json", comparisons.dump(1) + "\n");
  }
  return out;
}

}  // namespace adjorder
