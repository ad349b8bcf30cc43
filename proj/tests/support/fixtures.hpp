#pragma once

#include <string>
#include <vector>

#include "adjorder/embeddings.hpp"
#include "adjorder/model.hpp"
#include "adjorder/rng.hpp"
#include "brute_force.hpp"
#include "planted.hpp"

namespace adjorder::testing {

// Parameters with every learnable entry uniform in [-scale, scale].
inline Params random_params(int num_classes, int dim, WMode mode, Rng& rng, double scale = 1.0) {
  ModelConfig config;
  config.num_classes = num_classes;
  config.dim = dim;
  config.w_mode = mode;
  config.prune_top_m = std::min(config.prune_top_m, num_classes);
  Params params = zero_params<double>(config);
  for (Eigen::Index i = 0; i < params.class_map.size(); ++i) params.class_map(i) = rng.uniform(-scale, scale);
  if (mode == WMode::learned) {
    for (Eigen::Index i = 0; i < params.w_left.size(); ++i) params.w_left(i) = rng.uniform(-scale, scale);
    for (Eigen::Index i = 0; i < params.w_right.size(); ++i) params.w_right(i) = rng.uniform(-scale, scale);
  }
  return params;
}

inline Eigen::MatrixXd random_embeddings(int dim, int m, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd e(dim, m);
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = rng.uniform(-scale, scale);
  return e;
}

inline oracle::Mat to_oracle(const Eigen::MatrixXd& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

inline std::vector<oracle::Vec> columns(const Eigen::MatrixXd& m) {
  std::vector<oracle::Vec> out(m.cols(), oracle::Vec(m.rows()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) out[c][r] = m(r, c);
  return out;
}

// Words "k0", "k1", ... whose embeddings are one-hot, with a class map that
// sends word kN to class N with probability 1 - O(exp(-sharpness)).
struct OneHotWorld {
  EmbeddingTable table;
  Params params;
};

inline std::string class_word(int k) { return "k" + std::to_string(k); }

inline OneHotWorld one_hot_world(int num_classes, WMode mode, double sharpness = 60.0) {
  ModelConfig config;
  config.num_classes = num_classes;
  config.dim = num_classes;
  config.w_mode = mode;
  config.prune_top_m = std::min(config.prune_top_m, num_classes);
  OneHotWorld world{EmbeddingTable("xx", num_classes), zero_params<double>(config)};
  world.params.class_map = sharpness * Eigen::MatrixXd::Identity(num_classes, num_classes);
  for (int k = 0; k < num_classes; ++k) world.table.insert(class_word(k), Eigen::VectorXd::Unit(num_classes, k));
  return world;
}

}  // namespace adjorder::testing
