// Acceptance suite. Prints one line per criterion:
//
//   acceptance            run criteria 1-9
//   acceptance 2 5        run the listed criteria
//   acceptance rehearsal  run the corpus criteria on a synthetic planted corpus
//
// Exit status is 1 if anything failed, 77 if everything selected was
// skipped, 0 otherwise.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "adjorder/conllu.hpp"
#include "adjorder/embeddings.hpp"
#include "adjorder/evaluation.hpp"
#include "adjorder/model.hpp"
#include "adjorder/scenarios.hpp"
#include "adjorder/training.hpp"
#include "support/brute_force.hpp"
#include "support/fixtures.hpp"
#include "support/planted.hpp"

namespace fs = std::filesystem;
using namespace adjorder;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

std::string format(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

// 1. Oracle equivalence.

Outcome oracle_equivalence() {
  Rng rng(101);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const int classes = 2 + static_cast<int>(rng.below(3));
    const int dim = 1 + static_cast<int>(rng.below(8));
    const int m = 2 + static_cast<int>(rng.below(3));
    const WMode mode = rng.coin() ? WMode::learned : WMode::fixed_total_order;
    const Params params = testing::random_params(classes, dim, mode, rng, 2.0);
    const Side side = rng.coin() ? Side::left : Side::right;
    const Eigen::MatrixXd e = testing::random_embeddings(dim, m, rng, 2.0);
    std::vector<int> order = oracle::identity(m);
    rng.shuffle(order);

    const double got = side_permutation_log_prob<double>(e, order, params.interaction(side), params);
    const oracle::Real want = std::log(oracle::side_probability(
        testing::to_oracle(params.class_map), testing::columns(e), order, testing::to_oracle(params.interaction(side))));
    worst = std::max(worst, std::abs(got - static_cast<double>(want)));
  }
  return verdict(worst <= 1e-10, format("max |log p - oracle| = %.3g over 1000 instances", worst));
}

// 2. Gradient correctness.

struct GradientInstance {
  Params params;
  EmbeddingTables tables;
  std::vector<Phrase> batch;
  std::vector<oracle::Example> examples;
};

GradientInstance gradient_instance(WMode mode, Rng& rng) {
  GradientInstance g;
  const int classes = 2 + static_cast<int>(rng.below(3));
  const int dim = 2 + static_cast<int>(rng.below(5));
  g.params = testing::random_params(classes, dim, mode, rng, 1.0);
  EmbeddingTable table("xx", dim);
  std::vector<std::string> words;
  for (int i = 0; i < 6; ++i) {
    words.push_back("w" + std::to_string(i));
    table.insert(words.back(), testing::random_embeddings(dim, 1, rng, 1.5).col(0));
  }
  const auto run = [&](std::size_t m) {
    std::vector<std::string> copy = words;
    rng.shuffle(copy);
    copy.resize(m);
    return copy;
  };
  for (int i = 0; i < 4; ++i) {
    Phrase p{"xx", "n", {}, {}, ""};
    const std::size_t m = 2 + rng.below(2);
    switch (rng.below(3)) {
      case 0: p.left = run(m); break;
      case 1: p.right = run(m); break;
      default: p.left = run(2); p.right = run(m);
    }
    oracle::Example ex;
    for (const auto& a : p.left) ex.left.push_back(testing::columns(table.at(a)).front());
    for (const auto& a : p.right) ex.right.push_back(testing::columns(table.at(a)).front());
    g.batch.push_back(std::move(p));
    g.examples.push_back(std::move(ex));
  }
  g.tables.emplace("xx", std::move(table));
  return g;
}

Outcome gradient_correctness() {
  constexpr long double eps = 1e-4L;
  Rng rng(202);
  double worst = 0.0;
  std::size_t components = 0;
  for (int n = 0; n < 100; ++n) {
    const WMode mode = n % 2 == 0 ? WMode::learned : WMode::fixed_total_order;
    GradientInstance g = gradient_instance(mode, rng);
    const ParamGradient grad = gradients(g.batch, g.tables, g.params);
    oracle::Mat mats[3] = {testing::to_oracle(g.params.class_map), testing::to_oracle(g.params.w_left),
                           testing::to_oracle(g.params.w_right)};
    const Eigen::MatrixXd* analytic[3] = {&grad.class_map, &grad.w_left, &grad.w_right};
    for (int which = 0; which < (mode == WMode::learned ? 3 : 1); ++which) {
      oracle::Mat& target = mats[which];
      for (std::size_t r = 0; r < target.size(); ++r)
        for (std::size_t c = 0; c < target[r].size(); ++c) {
          const long double keep = target[r][c];
          target[r][c] = keep + eps;
          const long double up = oracle::nll(mats[0], mats[1], mats[2], g.examples);
          target[r][c] = keep - eps;
          const long double down = oracle::nll(mats[0], mats[1], mats[2], g.examples);
          target[r][c] = keep;
          const double numeric = static_cast<double>((up - down) / (2 * eps));
          const double a = (*analytic[which])(r, c);
          worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3}));
          ++components;
        }
    }
    if (mode == WMode::fixed_total_order && (!grad.w_left.isZero(0.0) || !grad.w_right.isZero(0.0)))
      return {Status::fail, "nonzero interaction gradient under the fixed total order"};
  }
  return verdict(worst <= 1e-4, format("max relative error %.3g over %zu components, 100 instances (50 learned, 50 fixed)",
                                    worst, components));
}

// 3. Normalization.

Outcome normalization() {
  Rng rng(303);
  double worst = 0.0;
  int cases = 0;
  for (int n = 0; n < 500; ++n) {
    const int classes = 2 + static_cast<int>(rng.below(7));
    const int dim = 1 + static_cast<int>(rng.below(10));
    const int m = 2 + static_cast<int>(rng.below(3));
    const Params params =
        testing::random_params(classes, dim, rng.coin() ? WMode::learned : WMode::fixed_total_order, rng, 3.0);
    const auto side = side_classes(testing::random_embeddings(dim, m, rng, 2.0), params);
    for (Side s : {Side::left, Side::right}) {
      const std::vector<double> lp = permutation_log_probs(side, params.interaction(s));
      double total = 0.0;
      for (double v : lp) total += std::exp(v);
      worst = std::max(worst, std::abs(total - 1.0));
      ++cases;
    }
  }
  return verdict(worst <= 1e-10, format("max |sum - 1| = %.3g over %d sides", worst, cases));
}

// 4. Total-order behavior.

Outcome total_order() {
  constexpr int classes = 15;
  const testing::OneHotWorld world = testing::one_hot_world(classes, WMode::fixed_total_order);
  Rng rng(404);
  int cases = 0, wrong = 0;
  const auto check = [&](std::vector<int> cls) {
    std::vector<std::string> words;
    for (int k : cls) words.push_back(testing::class_word(k));
    rng.shuffle(words);
    std::sort(cls.begin(), cls.end());
    for (Side side : {Side::left, Side::right}) {
      const SidePrediction p = predict_side(words, side, world.table, world.params);
      std::vector<std::string> want;
      for (int k : cls) want.push_back(testing::class_word(k));
      if (side == Side::right) std::reverse(want.begin(), want.end());
      ++cases;
      wrong += p.adjectives != want;
    }
  };
  // Every class subset of size 2..4.
  for (int m = 2; m <= 4; ++m) {
    std::vector<bool> mask(classes, false);
    std::fill(mask.begin(), mask.begin() + m, true);
    do {
      std::vector<int> cls;
      for (int k = 0; k < classes; ++k)
        if (mask[k]) cls.push_back(k);
      check(cls);
    } while (std::prev_permutation(mask.begin(), mask.end()));
  }
  const int exhaustive = cases;
  // Random larger sides, which go through pruning.
  for (int n = 0; n < 100; ++n) {
    std::vector<int> all(classes);
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    all.resize(5 + rng.below(2));
    check(all);
  }
  return verdict(wrong == 0, format("%d of %d wrong (%d exhaustive for m <= 4, %d random for m in 5..6)", wrong, cases,
                                 exhaustive, cases - exhaustive));
}

// 5. Planted-model recovery.

Outcome planted_recovery() {
  testing::PlantedConfig config;  // 15 classes, 50 dimensions
  const testing::PlantedWorld world = testing::make_world(config);
  Rng rng(505);
  const std::vector<Phrase> train_set = testing::sample_planted(world, "xx", 5000, {}, rng);
  const std::vector<Phrase> test_set = testing::sample_planted(world, "xx", 1000, {}, rng);

  ModelConfig model;
  model.num_classes = config.num_classes;
  model.dim = config.dim;
  model.w_mode = WMode::fixed_total_order;
  TrainConfig tc;  // one epoch, lr 0.1, batch 32
  const auto [params, report] = train(train_set, world.tables, model, tc);

  std::size_t correct = 0;
  for (const Phrase& p : test_set) {
    const SidePrediction got = predict_side(p.left, Side::left, world.tables.at("xx"), params);
    correct += got.adjectives == testing::planted_order(world, "xx", p.left, false);
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
  return verdict(accuracy >= 0.9, format("held-out accuracy %.4f on %zu phrases after %zu updates", accuracy,
                                      test_set.size(), report.batch_nll.size()));
}

// 6 and 7. Corpus-scale results.

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  return v ? v : "";
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

struct LanguageData {
  std::vector<std::string> conllu;
  std::string embeddings;
};

struct LoadedCorpora {
  Corpora corpora;
  EmbeddingTables tables;
  std::map<std::string, std::size_t> extracted;
};

LoadedCorpora load_corpora(const std::map<std::string, LanguageData>& data, std::optional<std::size_t> limit) {
  LoadedCorpora out;
  for (const auto& [lang, files] : data) {
    out.tables.emplace(lang, load_embeddings_file(files.embeddings, lang, limit));
    std::vector<Phrase> phrases;
    for (const std::string& path : files.conllu) {
      const auto sentences = parse_conllu_file(path);
      const auto found = extract_phrases(sentences, ExtractionConfig{}, lang, fs::path(path).filename().string());
      phrases.insert(phrases.end(), found.begin(), found.end());
    }
    out.extracted[lang] = phrases.size();
    out.corpora[lang] = filter_phrases_by_vocab(phrases, out.tables);
  }
  return out;
}

int model_dim(const EmbeddingTables& tables) { return tables.begin()->second.dim(); }

Outcome english_result(const std::map<std::string, LanguageData>& data, std::optional<std::size_t> limit) {
  LoadedCorpora loaded = load_corpora(data, limit);
  const std::size_t usable = loaded.corpora.at("en").size();
  if (usable < 1000)
    return {Status::fail, format("only %zu in-vocabulary phrases (%zu extracted); need at least 1000", usable,
                              loaded.extracted.at("en"))};
  ScenarioSpec spec;
  spec.name = "english";
  spec.kind = ScenarioKind::english_token;
  spec.train_languages = {"en"};
  spec.test_languages = {"en"};
  spec.variant = Variant::EF;
  spec.model.dim = model_dim(loaded.tables);
  spec.model.w_mode = w_mode_of(spec.variant);
  const ScenarioResult result = run_scenario(spec, loaded.corpora, loaded.tables);
  const LanguageResult& r = result.results.front();
  const double margin = r.report.accuracy - r.report.random_baseline;
  return verdict(margin >= 0.15 && r.vs_random.p_value < 0.01,
                 format("%zu phrases, test n=%zu, accuracy %.4f, baseline %.4f, margin %.4f, p=%.5f", usable, r.report.n,
                     r.report.accuracy, r.report.random_baseline, margin, r.vs_random.p_value));
}

Outcome transfer_result(const std::vector<std::string>& languages, const std::map<std::string, LanguageData>& data,
                        std::optional<std::size_t> limit) {
  LoadedCorpora loaded = load_corpora(data, limit);
  ScenarioSpec spec;
  spec.name = "transfer";
  spec.kind = ScenarioKind::transfer;
  spec.train_languages.assign(languages.begin(), languages.end() - 1);
  spec.test_languages = {languages.back()};
  spec.variant = Variant::MF;
  spec.model.dim = model_dim(loaded.tables);
  spec.model.w_mode = w_mode_of(spec.variant);
  const ScenarioResult result = run_scenario(spec, loaded.corpora, loaded.tables);
  const LanguageResult& r = result.results.front();
  std::string sizes;
  for (const auto& [lang, phrases] : loaded.corpora) sizes += format(" %s=%zu", lang.c_str(), phrases.size());
  return verdict(r.report.accuracy > r.report.random_baseline && r.vs_random.p_value < 0.05,
                 format("test %s n=%zu, accuracy %.4f, baseline %.4f, p=%.5f; phrases%s", languages.back().c_str(),
                     r.report.n, r.report.accuracy, r.report.random_baseline, r.vs_random.p_value, sizes.c_str()));
}

std::optional<std::size_t> embedding_limit() {
  const std::string v = env("ADJORDER_EMB_LIMIT");
  if (v.empty()) return std::nullopt;
  return static_cast<std::size_t>(std::stoull(v));
}

Outcome english_corpus() {
  const std::string conllu = env("ADJORDER_UD_EN"), vec = env("ADJORDER_EMB_EN");
  if (conllu.empty() || vec.empty())
    return {Status::skip, "set ADJORDER_UD_EN (CoNLL-U paths, ':'-separated) and ADJORDER_EMB_EN (.vec)"};
  return english_result({{"en", {split_list(conllu, ':'), vec}}}, embedding_limit());
}

Outcome transfer_corpus() {
  const std::vector<std::string> languages = split_list(env("ADJORDER_TRANSFER_LANGS"), ',');
  if (languages.size() != 4)
    return {Status::skip,
            "set ADJORDER_TRANSFER_LANGS to four codes (the last is held out) with ADJORDER_UD_<LANG> and "
            "ADJORDER_EMB_<LANG> for each"};
  std::map<std::string, LanguageData> data;
  for (const std::string& lang : languages) {
    const std::string conllu = env("ADJORDER_UD_" + upper(lang)), vec = env("ADJORDER_EMB_" + upper(lang));
    if (conllu.empty() || vec.empty())
      return {Status::skip, "missing ADJORDER_UD_" + upper(lang) + " or ADJORDER_EMB_" + upper(lang)};
    data[lang] = {split_list(conllu, ':'), vec};
  }
  return transfer_result(languages, data, embedding_limit());
}

// 8. Baseline exactness.

Outcome baseline_exactness() {
  std::vector<Phrase> pairs;
  for (int i = 0; i < 37; ++i)
    pairs.push_back(i % 3 == 0 ? Phrase{"xx", "n", {}, {"a", "b"}, ""} : Phrase{"xx", "n", {"a", "b"}, {}, ""});
  const double pairs_only = random_baseline(pairs);

  // Pair, triple, pair + triple across the noun, four on one side:
  // (1/2 + 1/6 + 1/12 + 1/24) / 4 = 19/96.
  const std::vector<Phrase> mixed = {{"xx", "n", {"a", "b"}, {}, ""},
                                     {"xx", "n", {"a", "b", "c"}, {}, ""},
                                     {"xx", "n", {"a", "b"}, {"c", "d", "e"}, ""},
                                     {"xx", "n", {}, {"a", "b", "c", "d"}, ""}};
  const double mixed_value = random_baseline(mixed);
  const double want = 19.0 / 96.0;
  return verdict(pairs_only == 0.5 && std::abs(mixed_value - want) <= 1e-15,
                 format("pairs-only %.17g (want exactly 0.5); mixed %.17g vs 19/96 = %.17g", pairs_only, mixed_value,
                     want));
}

// 9. Reproducibility.

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

int shell(const fs::path& cwd, const std::string& args) {
  const std::string command = "cd '" + cwd.string() + "' && '" ADJORDER_CLI_PATH "' --log-level off " + args +
                              " > stdout_" + std::to_string(std::hash<std::string>{}(args) % 100000) + ".txt";
  return std::system(command.c_str());
}

Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / format("adjorder_repro_%d", static_cast<int>(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root / "inputs");

  testing::PlantedConfig config;
  config.num_classes = 6;
  config.dim = 8;
  config.adjectives_per_class = 10;
  config.languages = {"en", "fr"};
  const testing::PlantedWorld world = testing::make_world(config);
  Rng rng(909);
  write_file(root / "inputs/en.conllu", testing::to_conllu(testing::sample_planted(world, "en", 600, {}, rng)));
  write_file(root / "inputs/fr.conllu",
             testing::to_conllu(testing::sample_planted(world, "fr", 600, {.right_fraction = 0.7}, rng)));
  write_file(root / "inputs/en.vec", testing::to_vec(world.tables.at("en")));
  write_file(root / "inputs/fr.vec", testing::to_vec(world.tables.at("fr")));
  const std::string in = (root / "inputs").string() + "/";
  write_file(root / "inputs/matrix.json", R"({
    "out_dir": "scenarios",
    "languages": {"en": {"corpus": ")" + in + R"(en.conllu", "embeddings": ")" + in + R"(en.vec"},
                  "fr": {"corpus": ")" + in + R"(fr.conllu", "embeddings": ")" + in + R"(fr.vec"}},
    "defaults": {"model": {"num_classes": 6}, "permutations": 500},
    "runs": [{"name": "mono_fr", "kind": "mono", "train_languages": ["fr"], "test_language": "fr"},
             {"name": "joint_fr", "kind": "joint", "train_languages": ["en", "fr"], "test_language": "fr"}],
    "comparisons": [["mono_fr", "joint_fr", "fr"]]
  })");

  const std::vector<std::string> steps = {
      "--seed 3 extract --input " + in + "en.conllu --lang en --embeddings " + in + "en.vec --out en.jsonl",
      "--seed 3 split --input en.jsonl --mode token --train 0.9 --out-dir token",
      "--seed 3 split --input en.jsonl --mode type --train 0.8 --dev 20 --out-dir type",
      "--seed 3 train --train token/train.jsonl --embeddings en=" + in +
          "en.vec --variant EF --classes 6 --epochs 2 --out model.json --metrics metrics.jsonl",
      "--seed 3 eval --model model.json --test token/test.jsonl --baseline --significance --permutations 500 "
      "--out eval.json",
      "--seed 3 scenario --config " + in + "matrix.json",
  };

  std::vector<fs::path> runs = {root / "run1", root / "run2"};
  for (const fs::path& run : runs) {
    fs::create_directories(run);
    for (const std::string& step : steps)
      if (shell(run, step) != 0) return {Status::fail, "command failed: adjorder " + step};
  }

  std::set<std::string> names;
  for (const fs::path& run : runs)
    for (const auto& entry : fs::recursive_directory_iterator(run))
      if (entry.is_regular_file()) names.insert(fs::relative(entry.path(), run).string());
  std::vector<std::string> differing;
  for (const std::string& name : names)
    if (!fs::exists(runs[0] / name) || !fs::exists(runs[1] / name) ||
        slurp(runs[0] / name) != slurp(runs[1] / name))
      differing.push_back(name);
  const bool has_core = names.count("token/train.jsonl") && names.count("model.json") && names.count("eval.json");
  fs::remove_all(root);
  if (!has_core) return {Status::fail, "expected outputs were not written"};
  std::string list;
  for (const std::string& d : differing) list += " " + d;
  return verdict(differing.empty(), differing.empty()
                                        ? format("%zu output files byte-identical across two runs", names.size())
                                        : "differing:" + list);
}

// Synthetic rehearsal of 6 and 7: the same loading, extraction and scenario
// path, fed with planted CoNLL-U and embedding files.

Outcome rehearsal(bool transfer) {
  const fs::path root = fs::temp_directory_path() / format("adjorder_rehearsal_%d", static_cast<int>(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  testing::PlantedConfig config;
  config.languages = {"cs", "de", "en", "fr"};
  const testing::PlantedWorld world = testing::make_world(config);
  Rng rng(606);
  std::map<std::string, LanguageData> data;
  for (const std::string& lang : config.languages) {
    testing::PhraseShape shape;
    if (lang == "fr") shape.right_fraction = 0.7;
    if (lang == "cs") shape.both_fraction = 0.1;
    const fs::path conllu = root / (lang + ".conllu"), vec = root / (lang + ".vec");
    write_file(conllu, testing::to_conllu(testing::sample_planted(world, lang, 2000, shape, rng)));
    write_file(vec, testing::to_vec(world.tables.at(lang)));
    data[lang] = {{conllu.string()}, vec.string()};
  }
  Outcome out = transfer ? transfer_result({"cs", "de", "en", "fr"}, data, std::nullopt)
                         : english_result({{"en", data.at("en")}}, std::nullopt);
  fs::remove_all(root);
  return out;
}

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<Criterion> all = {
      {"1", "oracle equivalence", oracle_equivalence},
      {"2", "gradient correctness", gradient_correctness},
      {"3", "normalization", normalization},
      {"4", "total-order behavior", total_order},
      {"5", "planted-model recovery", planted_recovery},
      {"6", "UD English result", english_corpus},
      {"7", "cross-lingual transfer", transfer_corpus},
      {"8", "baseline exactness", baseline_exactness},
      {"9", "reproducibility", reproducibility},
      {"rehearsal-6", "UD English pipeline on a synthetic planted corpus (not real data)", [] { return rehearsal(false); }},
      {"rehearsal-7", "transfer pipeline on a synthetic planted corpus (not real data)", [] { return rehearsal(true); }},
  };

  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty()) wanted = {"1", "2", "3", "4", "5", "6", "7", "8", "9"};
  if (wanted == std::vector<std::string>{"rehearsal"}) wanted = {"rehearsal-6", "rehearsal-7"};

  int failed = 0, skipped = 0;
  for (const std::string& id : wanted) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
    if (it == all.end()) {
      std::cerr << "unknown criterion '" << id << "'\n";
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = it->run();
    } catch (const std::exception& e) {
      outcome = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* label = outcome.status == Status::pass ? "PASS" : outcome.status == Status::fail ? "FAIL" : "SKIP";
    std::cout << label << "  " << it->id << "  " << it->title << ": " << outcome.detail << format(" [%.1f s]", seconds)
              << std::endl;
    failed += outcome.status == Status::fail;
    skipped += outcome.status == Status::skip;
  }
  if (failed) return 1;
  if (skipped == static_cast<int>(wanted.size())) return 77;
  return 0;
}
