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
#include "adjorder/rng.hpp"

namespace adjorder {

struct TrainConfig {
  double learning_rate = 0.1;
  int batch_size = 32;
  int epochs = 1;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  // Reshuffle the pool at the start of each epoch.
  bool shuffle = true;

  void validate() const;
};

struct ParamGradient {
  Eigen::MatrixXd class_map;
  Eigen::MatrixXd w_left;
  Eigen::MatrixXd w_right;
};

struct TrainReport {
  std::vector<double> batch_nll;  // mean NLL of each batch before its update
  std::string params_digest;
  std::size_t used = 0;
  std::size_t skipped = 0;  // OOV or without a side of length >= 2
};

// True when the phrase has a side with at least two adjectives.
bool is_scorable(const Phrase& phrase);

// Mean negative log-likelihood of the observed orders.
double nll_loss(const std::vector<Phrase>& batch, const EmbeddingTables& tables, const Params& params);

// Gradient of nll_loss. Interaction-matrix gradients are zero under the
// fixed total order. Stores the loss in `loss` when given.
ParamGradient gradients(const std::vector<Phrase>& batch, const EmbeddingTables& tables,
                        const Params& params, double* loss = nullptr);

// Class map uniform in [-s/sqrt(d), s/sqrt(d)]; learned matrices start at 0.
Params initialize_params(const ModelConfig& config, double init_scale, Rng& rng);

std::pair<Params, TrainReport> train(const std::vector<Phrase>& dataset, const EmbeddingTables& tables,
                                     const ModelConfig& model_config, const TrainConfig& train_config);

// One JSON object per batch, then a summary line.
void write_train_report(std::ostream& out, const TrainReport& report, const TrainConfig& config);

}  // namespace adjorder
