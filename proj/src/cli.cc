#include "adjorder/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "adjorder/conllu.hpp"
#include "adjorder/dataset.hpp"
#include "adjorder/digest.hpp"
#include "adjorder/embeddings.hpp"
#include "adjorder/evaluation.hpp"
#include "adjorder/model_io.hpp"
#include "adjorder/scenarios.hpp"
#include "adjorder/training.hpp"

namespace adjorder {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void setup_logging(const std::string& level) {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("adjorder")); });
  std::string name = level;
  if (name.empty()) {
    const char* env = std::getenv("ADJORDER_LOG_LEVEL");
    name = env ? env : "warn";
  }
  const auto parsed = spdlog::level::from_str(name);
  if (parsed == spdlog::level::off && name != "off") throw Error("unknown log level '" + name + "'");
  spdlog::set_level(parsed);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("failed writing " + path);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// "lang=path" entries, or a bare path for `default_lang`.
std::map<std::string, std::string> embedding_paths(const std::vector<std::string>& specs,
                                                   const std::string& default_lang) {
  std::map<std::string, std::string> out;
  for (const std::string& spec : specs) {
    const auto eq = spec.find('=');
    if (eq != std::string::npos && eq > 0 && spec.find('/') > eq) {
      out[spec.substr(0, eq)] = spec.substr(eq + 1);
    } else {
      if (default_lang.empty()) throw Error("embedding path '" + spec + "' needs a language (use lang=path or --lang)");
      out[default_lang] = spec;
    }
  }
  return out;
}

EmbeddingTables load_tables(const std::map<std::string, std::string>& paths, std::optional<std::size_t> limit) {
  EmbeddingTables tables;
  for (const auto& [lang, path] : paths) tables.emplace(lang, load_embeddings_file(path, lang, limit));
  return tables;
}

std::optional<std::size_t> to_limit(std::size_t limit) {
  return limit == 0 ? std::nullopt : std::optional<std::size_t>(limit);
}

// Tables for a saved model: explicit flags override the paths it recorded.
EmbeddingTables model_tables(const ModelFile& model, const std::vector<std::string>& flags, const std::string& lang,
                             std::size_t limit) {
  std::map<std::string, std::string> paths = model.embeddings;
  for (const auto& [l, p] : embedding_paths(flags, lang)) paths[l] = p;
  if (paths.empty()) throw Error("no embeddings given and the model records none");
  return load_tables(paths, to_limit(limit));
}

const EmbeddingTable& pick_table(const EmbeddingTables& tables, const std::string& lang) {
  if (!lang.empty()) return table_for(tables, lang);
  if (tables.size() != 1) throw Error("several embedding tables loaded; choose one with --lang");
  return tables.begin()->second;
}

json manifest_base(const std::vector<std::string>& args, std::uint64_t seed) {
  return json{{"command", std::vector<std::string>(args.begin() + 1, args.end())}, {"seed", seed}};
}

json stats_to_json(const DatasetStats& s) {
  const auto hist = [](const std::map<std::size_t, std::size_t>& h) {
    json j = json::object();
    for (const auto& [k, v] : h) j[std::to_string(k)] = v;
    return j;
  };
  return json{{"phrases", s.phrases},
              {"adjective_types", s.adjective_types},
              {"by_k", hist(s.by_k)},
              {"left_lengths", hist(s.left_lengths)},
              {"right_lengths", hist(s.right_lengths)}};
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-class adjective ordering: extract, split, train, predict and evaluate."};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::string log_level;
  app.add_option("--seed", seed, "Seed for every random draw")->default_val(0);
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off (env ADJORDER_LOG_LEVEL)");

  // extract
  auto* extract = app.add_subcommand("extract", "Extract multi-adjective noun phrases from CoNLL-U");
  std::vector<std::string> ex_inputs;
  std::string ex_lang, ex_out;
  std::vector<std::string> ex_embeddings;
  std::size_t emb_limit = 0;
  ExtractionConfig ex_config;
  bool ex_no_amod = false, ex_keep_case = false, ex_keep_dups = false;
  extract->add_option("--input", ex_inputs, "CoNLL-U file(s)")->required();
  extract->add_option("--lang", ex_lang, "Language code")->required();
  extract->add_option("--embeddings", ex_embeddings, "Embedding table; keeps in-vocabulary phrases only");
  extract->add_option("--embeddings-limit", emb_limit, "Read at most this many vectors (0 = all)");
  extract->add_option("--out", ex_out, "Phrase file (JSONL)")->required();
  extract->add_flag("--no-amod", ex_no_amod, "Use adjacency only, ignore dependency arcs");
  extract->add_option("--min-side", ex_config.min_side)->default_val(2);
  extract->add_option("--max-total", ex_config.max_total_adjectives)->default_val(6);
  extract->add_flag("--keep-case", ex_keep_case);
  extract->add_flag("--keep-duplicates", ex_keep_dups);

  // split
  auto* split = app.add_subcommand("split", "Split a phrase file by token or by adjective type");
  std::string sp_input, sp_mode = "token", sp_out;
  double sp_train = 0.9;
  std::size_t sp_dev = 0, sp_sample = 0;
  split->add_option("--input", sp_input)->required();
  split->add_option("--mode", sp_mode)->check(CLI::IsMember({"token", "type"}));
  split->add_option("--train", sp_train, "Fraction in (0,1), or a phrase count in token mode");
  split->add_option("--dev", sp_dev, "Dev phrases drawn before splitting");
  split->add_option("--sample", sp_sample, "Uniformly subsample the corpus to this size first");
  split->add_option("--out-dir", sp_out)->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Summarize a phrase file");
  std::string st_input;
  stats->add_option("--input", st_input)->required();

  // train
  auto* trn = app.add_subcommand("train", "Fit a model by batch gradient descent");
  std::vector<std::string> tr_inputs, tr_embeddings;
  std::string tr_variant = "MF", tr_out, tr_metrics, tr_lang;
  ModelConfig tr_model;
  TrainConfig tr_config;
  trn->add_option("--train", tr_inputs, "Training phrase file(s)")->required();
  trn->add_option("--embeddings", tr_embeddings, "lang=path, repeatable")->required();
  trn->add_option("--embeddings-limit", emb_limit);
  trn->add_option("--lang", tr_lang, "Language for a bare embedding path");
  trn->add_option("--variant", tr_variant)->check(CLI::IsMember({"EL", "EF", "ML", "MF"}));
  trn->add_option("--classes", tr_model.num_classes)->default_val(15);
  trn->add_option("--exact-side-limit", tr_model.exact_side_limit)->default_val(4);
  trn->add_option("--prune-top-m", tr_model.prune_top_m)->default_val(5);
  trn->add_option("--lr", tr_config.learning_rate)->default_val(0.1);
  trn->add_option("--batch", tr_config.batch_size)->default_val(32);
  trn->add_option("--epochs", tr_config.epochs)->default_val(1);
  trn->add_option("--init-scale", tr_config.init_scale)->default_val(0.1);
  trn->add_option("--out", tr_out, "Model file")->required();
  trn->add_option("--metrics", tr_metrics, "Per-batch metrics (JSONL)");

  // predict
  auto* predict = app.add_subcommand("predict", "Order a set of adjectives");
  std::string pr_model, pr_adjectives, pr_side = "left", pr_lang;
  std::vector<std::string> pr_embeddings;
  bool pr_json = false;
  predict->add_option("--model", pr_model)->required();
  predict->add_option("--adjectives", pr_adjectives, "Comma-separated adjectives")->required();
  predict->add_option("--side", pr_side)->check(CLI::IsMember({"left", "right"}));
  predict->add_option("--embeddings", pr_embeddings, "Overrides the tables recorded in the model");
  predict->add_option("--embeddings-limit", emb_limit);
  predict->add_option("--lang", pr_lang);
  predict->add_flag("--json", pr_json);

  // eval
  auto* eval = app.add_subcommand("eval", "Accuracy on a test phrase file");
  std::string ev_model, ev_test, ev_out, ev_lang;
  std::vector<std::string> ev_embeddings;
  bool ev_baseline = false, ev_significance = false;
  int permutations = 10000;
  eval->add_option("--model", ev_model)->required();
  eval->add_option("--test", ev_test)->required();
  eval->add_option("--embeddings", ev_embeddings);
  eval->add_option("--embeddings-limit", emb_limit);
  eval->add_option("--lang", ev_lang);
  eval->add_option("--out", ev_out, "Report file (JSON)");
  eval->add_flag("--baseline", ev_baseline, "Print the exact random baseline");
  eval->add_flag("--significance", ev_significance, "Paired test against a uniform random orderer");
  eval->add_option("--permutations", permutations)->default_val(10000);

  // classes
  auto* classes = app.add_subcommand("classes", "Class membership of adjectives");
  std::string cl_model, cl_adjectives, cl_phrases, cl_out, cl_lang;
  std::vector<std::string> cl_embeddings;
  std::size_t cl_top = 100;
  classes->add_option("--model", cl_model)->required();
  classes->add_option("--adjectives", cl_adjectives, "Comma-separated adjectives");
  classes->add_option("--phrases", cl_phrases, "Take the most frequent adjectives of this phrase file");
  classes->add_option("--top", cl_top)->default_val(100);
  classes->add_option("--embeddings", cl_embeddings);
  classes->add_option("--embeddings-limit", emb_limit);
  classes->add_option("--lang", cl_lang);
  classes->add_option("--out", cl_out);

  // pairs
  auto* pairs = app.add_subcommand("pairs", "Agreement with a file of ordered adjective pairs");
  std::string pa_model, pa_pairs, pa_out, pa_lang;
  std::vector<std::string> pa_embeddings;
  pairs->add_option("--model", pa_model)->required();
  pairs->add_option("--pairs", pa_pairs, "first<TAB>second per line")->required();
  pairs->add_option("--embeddings", pa_embeddings);
  pairs->add_option("--embeddings-limit", emb_limit);
  pairs->add_option("--lang", pa_lang);
  pairs->add_option("--permutations", permutations)->default_val(10000);
  pairs->add_option("--out", pa_out);

  // significance
  auto* sig = app.add_subcommand("significance", "Paired permutation test between two evaluation reports");
  std::string sg_a, sg_b, sg_out;
  double alpha = 0.05;
  sig->add_option("--a", sg_a, "Report of system A")->required();
  sig->add_option("--b", sg_b, "Report of system B")->required();
  sig->add_option("--permutations", permutations)->default_val(10000);
  sig->add_option("--alpha", alpha)->default_val(0.05);
  sig->add_option("--out", sg_out);

  // scenario
  auto* scenario = app.add_subcommand("scenario", "Run a scenario manifest");
  std::string sc_config;
  scenario->add_option("--config", sc_config)->required()->check(CLI::ExistingFile);

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const auto extras = app.remaining();
    if (!extras.empty() && app.get_subcommands().empty()) err << "unknown subcommand '" << extras.front() << "'\n";
    const int status = app.exit(e, out, err);
    if (status != 0) {
      const auto parsed = app.get_subcommands();
      err << "\n" << (parsed.empty() ? app.help() : parsed.back()->help());
    }
    return status;
  }

  try {
    setup_logging(log_level);

    if (*extract) {
      ex_config.require_amod = !ex_no_amod;
      ex_config.lowercase = !ex_keep_case;
      ex_config.drop_duplicate_adjectives = !ex_keep_dups;
      std::vector<Phrase> phrases;
      json inputs = json::object();
      for (const std::string& path : ex_inputs) {
        auto found = extract_phrases(parse_conllu_file(path), ex_config, ex_lang, fs::path(path).filename().string());
        phrases.insert(phrases.end(), found.begin(), found.end());
        inputs[path] = sha256_file(path);
      }
      const std::size_t extracted = phrases.size();
      json manifest = manifest_base(args, seed);
      if (!ex_embeddings.empty()) {
        const auto paths = embedding_paths(ex_embeddings, ex_lang);
        phrases = filter_phrases_by_vocab(phrases, load_tables(paths, to_limit(emb_limit)));
        for (const auto& [l, p] : paths) inputs[p] = sha256_file(p);
      }
      write_phrases_file(ex_out, phrases);
      manifest["inputs"] = inputs;
      manifest["config"] = {{"require_amod", ex_config.require_amod},
                            {"min_side", ex_config.min_side},
                            {"max_total_adjectives", ex_config.max_total_adjectives},
                            {"lowercase", ex_config.lowercase},
                            {"drop_duplicate_adjectives", ex_config.drop_duplicate_adjectives}};
      manifest["extracted"] = extracted;
      manifest["written"] = phrases.size();
      manifest["output_digest"] = sha256_file(ex_out);
      write_text(ex_out + ".manifest.json", manifest.dump(1) + "\n");
      out << "extracted " << extracted << " phrases, wrote " << phrases.size() << " to " << ex_out << "\n";
      return 0;
    }

    if (*split) {
      std::vector<Phrase> phrases = read_phrases_file(sp_input);
      if (sp_sample > 0 && sp_sample < phrases.size()) phrases = sample_phrases(phrases, sp_sample, seed);
      SplitSpec spec;
      spec.mode = parse_split_mode(sp_mode);
      spec.train = sp_train;
      spec.seed = seed;
      if (sp_dev > 0) spec.dev_count = sp_dev;
      const DatasetSplit result = split_dataset(phrases, spec);
      fs::create_directories(sp_out);
      const fs::path dir(sp_out);
      write_phrases_file((dir / "train.jsonl").string(), result.train);
      write_phrases_file((dir / "test.jsonl").string(), result.test);
      if (result.dev) write_phrases_file((dir / "dev.jsonl").string(), *result.dev);
      json manifest = manifest_base(args, seed);
      manifest["spec"] = {{"mode", sp_mode}, {"train", sp_train}, {"dev_count", sp_dev}, {"sample", sp_sample}};
      manifest["source_digest"] = sha256_file(sp_input);
      manifest["counts"] = {{"train", result.train.size()},
                            {"test", result.test.size()},
                            {"dev", result.dev ? result.dev->size() : 0}};
      manifest["stats"] = {{"train", stats_to_json(dataset_stats(result.train))},
                           {"test", stats_to_json(dataset_stats(result.test))}};
      write_text((dir / "manifest.json").string(), manifest.dump(1) + "\n");
      out << "train " << result.train.size() << ", test " << result.test.size();
      if (result.dev) out << ", dev " << result.dev->size();
      out << "\n";
      return 0;
    }

    if (*stats) {
      out << stats_to_json(dataset_stats(read_phrases_file(st_input))).dump(1) << "\n";
      return 0;
    }

    if (*trn) {
      const Variant variant = parse_variant(tr_variant);
      const auto paths = embedding_paths(tr_embeddings, tr_lang);
      const EmbeddingTables tables = load_tables(paths, to_limit(emb_limit));
      std::vector<Phrase> phrases;
      json inputs = json::object();
      for (const std::string& path : tr_inputs) {
        auto part = read_phrases_file(path);
        phrases.insert(phrases.end(), part.begin(), part.end());
        inputs[path] = sha256_file(path);
      }
      tr_model.dim = tables.begin()->second.dim();
      tr_model.w_mode = w_mode_of(variant);
      tr_config.seed = seed;
      auto [params, report] = train(apply_variant_sides(phrases, variant), tables, tr_model, tr_config);
      write_model_file(tr_out, ModelFile{params, variant, paths});
      if (!tr_metrics.empty()) {
        std::ofstream metrics(tr_metrics, std::ios::binary);
        write_train_report(metrics, report, tr_config);
      }
      for (const auto& [l, p] : paths) inputs[p] = sha256_file(p);
      json manifest = manifest_base(args, seed);
      manifest["inputs"] = inputs;
      manifest["variant"] = tr_variant;
      manifest["params_digest"] = report.params_digest;
      write_text(tr_out + ".manifest.json", manifest.dump(1) + "\n");
      out << "trained " << tr_variant << " on " << report.used << " phrases (" << report.skipped
          << " skipped), final batch nll " << report.batch_nll.back() << "\n";
      return 0;
    }

    if (*predict) {
      const ModelFile model = read_model_file(pr_model);
      const EmbeddingTables tables = model_tables(model, pr_embeddings, pr_lang, emb_limit);
      const EmbeddingTable& table = pick_table(tables, pr_lang);
      const std::vector<std::string> adjectives = split_list(pr_adjectives);
      for (const std::string& a : adjectives)
        if (!table.contains(a)) throw Error("'" + a + "' has no embedding in the " + table.language() + " table");
      const Side side = pr_side == "left" ? Side::left : Side::right;
      const SidePrediction pred = predict_side(adjectives, side, table, model.params);
      if (pr_json) {
        out << json{{"order", pred.adjectives}, {"log_prob", pred.log_prob}, {"tied", pred.tied}}.dump() << "\n";
      } else {
        for (std::size_t i = 0; i < pred.adjectives.size(); ++i) out << (i ? " " : "") << pred.adjectives[i];
        out << "\n";
        if (pred.tied) err << "note: the best order is tied; the lexicographically smallest was chosen\n";
      }
      return 0;
    }

    if (*eval) {
      const ModelFile model = read_model_file(ev_model);
      const EmbeddingTables tables = model_tables(model, ev_embeddings, ev_lang, emb_limit);
      std::vector<Phrase> test = read_phrases_file(ev_test);
      if (model.variant) test = apply_variant_sides(test, *model.variant);
      std::erase_if(test, [](const Phrase& p) { return !is_scorable(p); });
      const EvalReport report = evaluate(test, tables, model.params);
      json j = json::parse(to_json(report));
      out << "accuracy " << report.accuracy;
      if (ev_baseline) out << " random_baseline " << report.random_baseline;
      out << " n " << report.n << " ties " << report.ties << "\n";
      if (ev_significance) {
        const SignificanceResult vs_random = paired_permutation_test(
            report.correct, random_orderer_correctness(test, seed), permutations, seed + 1);
        j["vs_random"] = json::parse(to_json(vs_random));
        out << "vs random orderer: diff " << vs_random.observed_diff << " p " << vs_random.p_value << "\n";
      }
      if (!ev_out.empty()) write_text(ev_out, j.dump() + "\n");
      return 0;
    }

    if (*classes) {
      const ModelFile model = read_model_file(cl_model);
      const EmbeddingTables tables = model_tables(model, cl_embeddings, cl_lang, emb_limit);
      std::vector<std::string> adjectives = split_list(cl_adjectives);
      if (!cl_phrases.empty()) {
        const auto more = most_common_adjectives(read_phrases_file(cl_phrases), cl_top);
        adjectives.insert(adjectives.end(), more.begin(), more.end());
      }
      if (adjectives.empty()) throw Error("give --adjectives or --phrases");
      const ClassReport report = class_report(adjectives, pick_table(tables, cl_lang), model.params);
      json entries = json::array();
      for (const ClassEntry& e : report.entries) {
        out << e.cls << "\t" << e.adjective << "\n";
        entries.push_back({{"adjective", e.adjective}, {"class", e.cls}, {"posterior", e.posterior}});
      }
      for (const std::string& s : report.skipped) out << "skipped\t" << s << "\n";
      if (!cl_out.empty())
        write_text(cl_out, json{{"entries", entries}, {"skipped", report.skipped}}.dump(1) + "\n");
      return 0;
    }

    if (*pairs) {
      const ModelFile model = read_model_file(pa_model);
      const EmbeddingTables tables = model_tables(model, pa_embeddings, pa_lang, emb_limit);
      const PairsResult result = evaluate_pairs(read_pairs_file(pa_pairs), pick_table(tables, pa_lang), model.params);
      out << "accuracy " << result.accuracy << " evaluated " << result.evaluated << " skipped " << result.skipped
          << "\n";
      json j{{"accuracy", result.accuracy}, {"evaluated", result.evaluated}, {"skipped", result.skipped}};
      if (result.evaluated > 0) {
        // Against a coin-flip orderer, whose expected accuracy on pairs is 1/2.
        Rng rng(seed);
        std::vector<bool> coin(result.evaluated);
        for (std::size_t i = 0; i < coin.size(); ++i) coin[i] = rng.coin();
        const SignificanceResult vs_random =
            paired_permutation_test(result.correct, coin, permutations, seed + 1);
        j["vs_random"] = json::parse(to_json(vs_random));
        out << "vs random orderer: p " << vs_random.p_value << "\n";
      }
      if (!pa_out.empty()) write_text(pa_out, j.dump(1) + "\n");
      return 0;
    }

    if (*sig) {
      const auto load = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open " + path);
        return eval_report_from_json(std::string(std::istreambuf_iterator<char>(in), {}));
      };
      const EvalReport a = load(sg_a), b = load(sg_b);
      const SignificanceResult result = paired_permutation_test(a.correct, b.correct, permutations, seed, alpha);
      out << "observed_diff " << result.observed_diff << " p_value " << result.p_value
          << (result.significant() ? " significant" : " not significant") << "\n";
      if (!sg_out.empty()) write_text(sg_out, to_json(result) + "\n");
      return 0;
    }

    if (*scenario) {
      std::ifstream in(sc_config, std::ios::binary);
      const std::string text((std::istreambuf_iterator<char>(in)), {});
      const ScenarioMatrix matrix = parse_scenario_matrix(text, fs::path(sc_config).parent_path().string());
      const MatrixResult result = run_scenario_matrix(matrix);
      for (const ScenarioResult& run : result.runs)
        for (const LanguageResult& lr : run.results)
          out << run.spec.name << "\t" << lr.language << "\taccuracy " << lr.report.accuracy << "\trandom "
              << lr.report.random_baseline << "\tp " << lr.vs_random.p_value << "\n";
      for (const ComparisonResult& c : result.comparisons)
        out << c.comparison.first << " vs " << c.comparison.second << " (" << c.comparison.language << ")\tdiff "
            << c.result.observed_diff << "\tp " << c.result.p_value << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace adjorder
