#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adjorder/embeddings.hpp"
#include "adjorder/error.hpp"
#include "adjorder/phrase.hpp"

namespace adjorder {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class WMode { learned, fixed_total_order };
enum class Side { left, right };

// Named presets. The E* variants train on prenominal runs only.
enum class Variant { EL, EF, ML, MF };

WMode w_mode_of(Variant variant);
bool is_two_sided(Variant variant);
std::string variant_name(Variant variant);
Variant parse_variant(const std::string& name);
std::string w_mode_name(WMode mode);
WMode parse_w_mode(const std::string& name);

// Drops postnominal runs for the left-only variants.
std::vector<Phrase> apply_variant_sides(const std::vector<Phrase>& phrases, Variant variant);

struct ModelConfig {
  int num_classes = 15;
  int dim = 300;
  WMode w_mode = WMode::learned;
  // Sides longer than this marginalise over the prune_top_m most probable
  // classes of each adjective instead of all of them.
  int exact_side_limit = 4;
  int prune_top_m = 5;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Longest side any scoring routine accepts.
inline constexpr int kMaxSideLength = 8;

template <typename Scalar>
struct ModelParams {
  ModelConfig config;
  Matrix<Scalar> class_map;  // num_classes x dim, logits = class_map * e(a)
  Matrix<Scalar> w_left;     // num_classes x num_classes
  Matrix<Scalar> w_right;

  const Matrix<Scalar>& interaction(Side side) const {
    return side == Side::left ? w_left : w_right;
  }
};

using Params = ModelParams<double>;

// Fixed total order: the left matrix has ones strictly above the diagonal,
// the right matrix ones strictly below it.
template <typename Scalar>
Matrix<Scalar> precedence_matrix(int num_classes, Side side) {
  Matrix<Scalar> w = Matrix<Scalar>::Zero(num_classes, num_classes);
  for (int i = 0; i < num_classes; ++i)
    for (int j = 0; j < num_classes; ++j)
      if (side == Side::left ? j > i : i > j) w(i, j) = Scalar(1);
  return w;
}

// Zero class map; interaction matrices zero (learned) or fixed.
template <typename Scalar>
ModelParams<Scalar> zero_params(const ModelConfig& config) {
  config.validate();
  ModelParams<Scalar> params;
  params.config = config;
  params.class_map = Matrix<Scalar>::Zero(config.num_classes, config.dim);
  if (config.w_mode == WMode::fixed_total_order) {
    params.w_left = precedence_matrix<Scalar>(config.num_classes, Side::left);
    params.w_right = precedence_matrix<Scalar>(config.num_classes, Side::right);
  } else {
    params.w_left = Matrix<Scalar>::Zero(config.num_classes, config.num_classes);
    params.w_right = Matrix<Scalar>::Zero(config.num_classes, config.num_classes);
  }
  return params;
}

template <typename Scalar>
Scalar log_sum_exp(std::span<const Scalar> values) {
  if (values.empty()) return -std::numeric_limits<Scalar>::infinity();
  const Scalar top = *std::max_element(values.begin(), values.end());
  if (top == -std::numeric_limits<Scalar>::infinity()) return top;
  Scalar sum = 0;
  for (Scalar v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

// Streaming log-sum-exp.
template <typename Scalar>
class LogAccumulator {
 public:
  void add(Scalar v) {
    if (v == -std::numeric_limits<Scalar>::infinity()) return;
    if (v > max_) {
      sum_ = sum_ * std::exp(max_ - v) + Scalar(1);
      max_ = v;
    } else {
      sum_ += std::exp(v - max_);
    }
  }
  Scalar value() const {
    return sum_ == Scalar(0) ? -std::numeric_limits<Scalar>::infinity() : max_ + std::log(sum_);
  }

 private:
  Scalar max_ = -std::numeric_limits<Scalar>::infinity();
  Scalar sum_ = 0;
};

template <typename Derived>
Vector<typename Derived::Scalar> log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = logits.maxCoeff();
  const Scalar norm = top + std::log((logits.array() - top).exp().sum());
  return (logits.array() - norm).matrix();
}

template <typename Scalar, typename Derived>
Vector<Scalar> class_posterior(const Eigen::MatrixBase<Derived>& embedding,
                               const ModelParams<Scalar>& params) {
  if (embedding.size() != params.class_map.cols())
    throw Error("embedding has " + std::to_string(embedding.size()) +
                " components, model expects " + std::to_string(params.class_map.cols()));
  const Vector<Scalar> logits = params.class_map * embedding.template cast<Scalar>();
  return log_softmax(logits).array().exp().matrix();
}

// Sum of W over consecutive pairs of the class sequence.
template <typename Scalar>
Scalar side_score(std::span<const int> classes, const Matrix<Scalar>& w) {
  for (int c : classes)
    if (c < 0 || c >= w.rows())
      throw Error("class index " + std::to_string(c) + " out of range");
  Scalar score = 0;
  for (std::size_t t = 0; t + 1 < classes.size(); ++t) score += w(classes[t], classes[t + 1]);
  return score;
}

// All permutations of {0..m-1} in lexicographic order; the identity is first.
const std::vector<std::vector<int>>& permutations(int m);

// Per-adjective class log-posteriors of one side, restricted to the classes
// that take part in the marginalisation.
template <typename Scalar>
struct SideClasses {
  Matrix<Scalar> log_post;                // m x C, -inf outside the support
  std::vector<std::vector<int>> support;  // ascending class indices per adjective
  bool pruned = false;

  int size() const { return static_cast<int>(log_post.rows()); }
};

// `embeddings` holds one adjective per column (dim x m), in surface order.
template <typename Scalar, typename Derived>
SideClasses<Scalar> side_classes(const Eigen::MatrixBase<Derived>& embeddings,
                                 const ModelParams<Scalar>& params) {
  const int m = static_cast<int>(embeddings.cols());
  const int num_classes = params.config.num_classes;
  if (embeddings.rows() != params.class_map.cols())
    throw Error("embedding dimension " + std::to_string(embeddings.rows()) +
                " does not match model dimension " + std::to_string(params.class_map.cols()));
  if (m > kMaxSideLength)
    throw Error("side of length " + std::to_string(m) + " exceeds the supported maximum");

  const Matrix<Scalar> logits = params.class_map * embeddings.template cast<Scalar>();
  SideClasses<Scalar> side;
  side.pruned = m > params.config.exact_side_limit && params.config.prune_top_m < num_classes;
  side.log_post = Matrix<Scalar>::Constant(m, num_classes, -std::numeric_limits<Scalar>::infinity());
  side.support.resize(m);
  for (int i = 0; i < m; ++i) {
    std::vector<int>& keep = side.support[i];
    keep.resize(num_classes);
    std::iota(keep.begin(), keep.end(), 0);
    if (side.pruned) {
      std::stable_sort(keep.begin(), keep.end(),
                       [&](int a, int b) { return logits(a, i) > logits(b, i); });
      keep.resize(params.config.prune_top_m);
      std::sort(keep.begin(), keep.end());
    }
    Vector<Scalar> kept(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) kept(k) = logits(keep[k], i);
    const Vector<Scalar> normalized = log_softmax(kept);
    for (std::size_t k = 0; k < keep.size(); ++k) side.log_post(i, keep[k]) = normalized(k);
  }
  return side;
}

namespace detail {

// Calls visit(classes, log_weight) for every class assignment in the support.
template <typename Scalar, typename Visit>
void for_each_assignment(const SideClasses<Scalar>& side, Visit&& visit) {
  const int m = side.size();
  std::vector<std::size_t> position(m, 0);
  std::vector<int> classes(m);
  for (int i = 0; i < m; ++i) classes[i] = side.support[i][0];
  for (;;) {
    Scalar log_weight = 0;
    for (int i = 0; i < m; ++i) log_weight += side.log_post(i, classes[i]);
    visit(std::span<const int>(classes), log_weight);
    int i = m - 1;
    for (; i >= 0; --i) {
      if (++position[i] < side.support[i].size()) {
        classes[i] = side.support[i][position[i]];
        break;
      }
      position[i] = 0;
      classes[i] = side.support[i][0];
    }
    if (i < 0) return;
  }
}

template <typename Scalar>
void permutation_scores(const std::vector<std::vector<int>>& perms, std::span<const int> classes,
                        const Matrix<Scalar>& w, std::vector<Scalar>& out) {
  out.resize(perms.size());
  for (std::size_t p = 0; p < perms.size(); ++p) {
    const std::vector<int>& perm = perms[p];
    Scalar score = 0;
    for (std::size_t t = 0; t + 1 < perm.size(); ++t)
      score += w(classes[perm[t]], classes[perm[t + 1]]);
    out[p] = score;
  }
}

}  // namespace detail

// Log-probability of every permutation of the side, indexed like
// permutations(m). Entry p is the probability that position t holds
// adjective permutations(m)[p][t].
template <typename Scalar>
std::vector<Scalar> permutation_log_probs(const SideClasses<Scalar>& side, const Matrix<Scalar>& w) {
  const int m = side.size();
  if (m < 2) throw Error("a side needs at least two adjectives to be ordered");
  const auto& perms = permutations(m);
  std::vector<LogAccumulator<Scalar>> acc(perms.size());
  std::vector<Scalar> scores;
  detail::for_each_assignment(side, [&](std::span<const int> classes, Scalar log_weight) {
    detail::permutation_scores(perms, classes, w, scores);
    const Scalar log_norm = log_sum_exp<Scalar>(scores);
    for (std::size_t p = 0; p < perms.size(); ++p) acc[p].add(log_weight + scores[p] - log_norm);
  });
  std::vector<Scalar> out(perms.size());
  for (std::size_t p = 0; p < perms.size(); ++p) out[p] = acc[p].value();
  return out;
}

template <typename Scalar>
struct SideGradient {
  Matrix<Scalar> log_post;  // d log p / d log_post, m x C
  Matrix<Scalar> w;         // d log p / d W, C x C (left empty unless requested)
};

// Log-probability of the surface order of the side (the identity
// permutation). When `grad` is given, fills the derivatives of that value.
template <typename Scalar>
Scalar side_log_prob(const SideClasses<Scalar>& side, const Matrix<Scalar>& w,
                     SideGradient<Scalar>* grad = nullptr, bool want_w_grad = true) {
  const int m = side.size();
  if (m < 2) throw Error("a side needs at least two adjectives to be ordered");
  const auto& perms = permutations(m);

  std::vector<Scalar> terms;
  std::vector<Scalar> scores;
  detail::for_each_assignment(side, [&](std::span<const int> classes, Scalar log_weight) {
    detail::permutation_scores(perms, classes, w, scores);
    terms.push_back(log_weight + scores[0] - log_sum_exp<Scalar>(scores));
  });
  const Scalar log_prob = log_sum_exp<Scalar>(terms);
  if (grad == nullptr) return log_prob;

  const Eigen::Index num_classes = side.log_post.cols();
  grad->log_post = Matrix<Scalar>::Zero(m, num_classes);
  if (want_w_grad)
    grad->w = Matrix<Scalar>::Zero(num_classes, num_classes);
  else
    grad->w.resize(0, 0);

  std::size_t n = 0;
  detail::for_each_assignment(side, [&](std::span<const int> classes, Scalar) {
    // Posterior weight of this assignment given the observed order.
    const Scalar weight = std::exp(terms[n++] - log_prob);
    for (int i = 0; i < m; ++i) grad->log_post(i, classes[i]) += weight;
    if (!want_w_grad || weight == Scalar(0)) return;
    detail::permutation_scores(perms, classes, w, scores);
    const Scalar log_norm = log_sum_exp<Scalar>(scores);
    for (int t = 0; t + 1 < m; ++t) grad->w(classes[t], classes[t + 1]) += weight;
    for (std::size_t p = 0; p < perms.size(); ++p) {
      const Scalar mass = weight * std::exp(scores[p] - log_norm);
      const std::vector<int>& perm = perms[p];
      for (int t = 0; t + 1 < m; ++t) grad->w(classes[perm[t]], classes[perm[t + 1]]) -= mass;
    }
  });
  return log_prob;
}

// Chains d log p / d log_post through the (possibly pruned) softmax to the
// logits. The result is C x m, matching class_map * embeddings.
template <typename Scalar>
Matrix<Scalar> logit_gradient(const SideClasses<Scalar>& side, const Matrix<Scalar>& d_log_post) {
  const int m = side.size();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(side.log_post.cols(), m);
  for (int i = 0; i < m; ++i) {
    const Scalar total = d_log_post.row(i).sum();
    for (int k : side.support[i]) out(k, i) = d_log_post(i, k) - std::exp(side.log_post(i, k)) * total;
  }
  return out;
}

// Side log-probability of `observed_order` (observed_order[t] is the column
// of `embeddings` found at surface position t).
template <typename Scalar, typename Derived>
Scalar side_permutation_log_prob(const Eigen::MatrixBase<Derived>& embeddings,
                                 std::span<const int> observed_order,
                                 const Matrix<Scalar>& w, const ModelParams<Scalar>& params) {
  const Eigen::Index m = embeddings.cols();
  if (static_cast<Eigen::Index>(observed_order.size()) != m)
    throw Error("order length does not match the number of adjectives");
  std::vector<bool> seen(m, false);
  Matrix<Scalar> ordered(embeddings.rows(), m);
  for (Eigen::Index t = 0; t < m; ++t) {
    const int j = observed_order[t];
    if (j < 0 || j >= m || seen[j]) throw Error("observed order is not a permutation");
    seen[j] = true;
    ordered.col(t) = embeddings.col(j).template cast<Scalar>();
  }
  return side_log_prob(side_classes(ordered, params), w);
}

// Phrase-level scoring over embedding tables.

Eigen::MatrixXd side_embeddings(const std::vector<std::string>& adjectives, const EmbeddingTable& table);

// Sum of the log-probabilities of the observed orders of the sides with at
// least two adjectives.
double phrase_log_prob(const Phrase& phrase, const EmbeddingTables& tables, const Params& params);

struct SidePrediction {
  std::vector<std::string> adjectives;  // predicted surface order
  std::vector<std::size_t> order;       // indices into the input list
  double log_prob = 0.0;
  bool tied = false;
};

struct OrderingPrediction {
  SidePrediction left;
  SidePrediction right;
  double log_prob = 0.0;
  bool tied = false;
};

// Relative tolerance under which two candidate orders count as tied.
inline constexpr double kTieTolerance = 1e-12;

// Most probable order of one side. Candidates are enumerated from the
// lexicographically sorted adjectives and ties keep the lexicographically
// smallest sequence, so the result depends only on the multiset.
SidePrediction predict_side(const std::vector<std::string>& adjectives, Side side,
                            const EmbeddingTable& table, const Params& params);

OrderingPrediction predict_order(const std::vector<std::string>& left,
                                 const std::vector<std::string>& right,
                                 const EmbeddingTable& table, const Params& params);
OrderingPrediction predict_order(const Phrase& phrase, const EmbeddingTables& tables,
                                 const Params& params);

}  // namespace adjorder
