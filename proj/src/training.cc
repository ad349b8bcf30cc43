#include "adjorder/training.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "adjorder/model_io.hpp"

namespace adjorder {
namespace {

bool in_vocabulary(const Phrase& phrase, const EmbeddingTable& table) {
  const auto known = [&](const std::string& a) { return table.contains(a); };
  return std::all_of(phrase.left.begin(), phrase.left.end(), known) &&
         std::all_of(phrase.right.begin(), phrase.right.end(), known);
}

void require_scorable(const std::vector<Phrase>& batch) {
  if (batch.empty()) throw Error("empty batch");
  for (const Phrase& p : batch)
    if (!is_scorable(p)) throw Error("phrase " + p.source_id + " has no side with two adjectives");
}

// Adds the gradient of the side's log-probability into `grad`.
double accumulate_side(const std::vector<std::string>& adjectives, const EmbeddingTable& table, Side side,
                       const Params& params, ParamGradient& grad) {
  const Eigen::MatrixXd embeddings = side_embeddings(adjectives, table);
  const SideClasses<double> classes = side_classes(embeddings, params);
  const bool learned = params.config.w_mode == WMode::learned;
  SideGradient<double> g;
  const double lp = side_log_prob(classes, params.interaction(side), &g, learned);
  grad.class_map.noalias() += logit_gradient(classes, g.log_post) * embeddings.transpose();
  if (learned) (side == Side::left ? grad.w_left : grad.w_right) += g.w;
  return lp;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw Error("learning_rate must be non-negative");
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (!(init_scale >= 0.0)) throw Error("init_scale must be non-negative");
}

bool is_scorable(const Phrase& phrase) { return phrase.left.size() >= 2 || phrase.right.size() >= 2; }

double nll_loss(const std::vector<Phrase>& batch, const EmbeddingTables& tables, const Params& params) {
  require_scorable(batch);
  double total = 0.0;
  for (const Phrase& p : batch) total -= phrase_log_prob(p, tables, params);
  return total / static_cast<double>(batch.size());
}

ParamGradient gradients(const std::vector<Phrase>& batch, const EmbeddingTables& tables, const Params& params,
                        double* loss) {
  require_scorable(batch);
  const Eigen::Index num_classes = params.config.num_classes;
  ParamGradient grad{Eigen::MatrixXd::Zero(num_classes, params.config.dim),
                     Eigen::MatrixXd::Zero(num_classes, num_classes),
                     Eigen::MatrixXd::Zero(num_classes, num_classes)};
  double log_lik = 0.0;
  for (const Phrase& p : batch) {
    const EmbeddingTable& table = table_for(tables, p.language);
    if (p.left.size() >= 2) log_lik += accumulate_side(p.left, table, Side::left, params, grad);
    if (p.right.size() >= 2) log_lik += accumulate_side(p.right, table, Side::right, params, grad);
  }
  // The accumulated values are d(sum log p); the loss is the negated mean.
  const double scale = -1.0 / static_cast<double>(batch.size());
  grad.class_map *= scale;
  grad.w_left *= scale;
  grad.w_right *= scale;
  if (loss) *loss = -log_lik / static_cast<double>(batch.size());
  return grad;
}

Params initialize_params(const ModelConfig& config, double init_scale, Rng& rng) {
  Params params = zero_params<double>(config);
  const double bound = init_scale / std::sqrt(static_cast<double>(config.dim));
  for (Eigen::Index r = 0; r < params.class_map.rows(); ++r)
    for (Eigen::Index c = 0; c < params.class_map.cols(); ++c) params.class_map(r, c) = rng.uniform(-bound, bound);
  return params;
}

std::pair<Params, TrainReport> train(const std::vector<Phrase>& dataset, const EmbeddingTables& tables,
                                     const ModelConfig& model_config, const TrainConfig& train_config) {
  model_config.validate();
  train_config.validate();
  for (const auto& [language, table] : tables)
    if (table.dim() != model_config.dim)
      throw Error("embedding table '" + language + "' has dimension " + std::to_string(table.dim()) +
                  ", model expects " + std::to_string(model_config.dim));

  TrainReport report;
  std::vector<Phrase> pool;
  for (const Phrase& p : dataset) {
    if (is_scorable(p) && in_vocabulary(p, table_for(tables, p.language)))
      pool.push_back(p);
    else
      ++report.skipped;
  }
  report.used = pool.size();
  if (pool.empty()) throw Error("no trainable phrases left after filtering");
  if (report.skipped > 0) spdlog::info("training skipped {} phrases (OOV or no side of length >= 2)", report.skipped);

  Rng rng(train_config.seed);
  Params params = initialize_params(model_config, train_config.init_scale, rng);
  const bool learned = model_config.w_mode == WMode::learned;
  const std::size_t batch_size = static_cast<std::size_t>(train_config.batch_size);

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Phrase> batch;
  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    if (train_config.shuffle) rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(pool[order[i]]);
      double loss = 0.0;
      const ParamGradient grad = gradients(batch, tables, params, &loss);
      report.batch_nll.push_back(loss);
      params.class_map -= train_config.learning_rate * grad.class_map;
      if (learned) {
        params.w_left -= train_config.learning_rate * grad.w_left;
        params.w_right -= train_config.learning_rate * grad.w_right;
      }
    }
    spdlog::debug("epoch {} done, last batch nll {}", epoch + 1, report.batch_nll.back());
  }
  report.params_digest = params_digest(params);
  return {std::move(params), std::move(report)};
}

void write_train_report(std::ostream& out, const TrainReport& report, const TrainConfig& config) {
  using nlohmann::json;
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  const std::size_t per_epoch = report.used == 0 ? 1 : (report.used + batch_size - 1) / batch_size;
  for (std::size_t i = 0; i < report.batch_nll.size(); ++i)
    out << json{{"epoch", i / per_epoch + 1}, {"batch", i % per_epoch + 1}, {"nll", report.batch_nll[i]}}.dump()
        << '\n';
  out << json{{"summary", true},
              {"used", report.used},
              {"skipped", report.skipped},
              {"batches", report.batch_nll.size()},
              {"params_digest", report.params_digest},
              {"learning_rate", config.learning_rate},
              {"batch_size", config.batch_size},
              {"epochs", config.epochs},
              {"seed", config.seed},
              {"init_scale", config.init_scale},
              {"shuffle", config.shuffle}}
             .dump()
      << '\n';
}

}  // namespace adjorder
