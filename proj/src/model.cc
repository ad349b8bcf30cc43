#include "adjorder/model.hpp"

#include <array>
#include <map>

namespace adjorder {

WMode w_mode_of(Variant variant) {
  return variant == Variant::EL || variant == Variant::ML ? WMode::learned : WMode::fixed_total_order;
}

bool is_two_sided(Variant variant) { return variant == Variant::ML || variant == Variant::MF; }

std::string variant_name(Variant variant) {
  switch (variant) {
    case Variant::EL: return "EL";
    case Variant::EF: return "EF";
    case Variant::ML: return "ML";
    case Variant::MF: return "MF";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "EL") return Variant::EL;
  if (name == "EF") return Variant::EF;
  if (name == "ML") return Variant::ML;
  if (name == "MF") return Variant::MF;
  throw Error("unknown variant '" + name + "' (expected EL, EF, ML or MF)");
}

std::string w_mode_name(WMode mode) { return mode == WMode::learned ? "learned" : "fixed_total_order"; }

WMode parse_w_mode(const std::string& name) {
  if (name == "learned") return WMode::learned;
  if (name == "fixed_total_order" || name == "fixed") return WMode::fixed_total_order;
  throw Error("unknown w_mode '" + name + "'");
}

std::vector<Phrase> apply_variant_sides(const std::vector<Phrase>& phrases, Variant variant) {
  if (is_two_sided(variant)) return phrases;
  std::vector<Phrase> out = phrases;
  for (Phrase& p : out) p.right.clear();
  return out;
}

void ModelConfig::validate() const {
  if (num_classes < 2) throw Error("num_classes must be at least 2");
  if (dim < 1) throw Error("dim must be positive");
  if (exact_side_limit < 2 || exact_side_limit > 6) throw Error("exact_side_limit must lie in [2, 6]");
  if (prune_top_m < 1) throw Error("prune_top_m must be at least 1");
}

const std::vector<std::vector<int>>& permutations(int m) {
  static const auto table = [] {
    std::array<std::vector<std::vector<int>>, kMaxSideLength + 1> all;
    for (int n = 0; n <= kMaxSideLength; ++n) {
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        all[n].push_back(perm);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return all;
  }();
  if (m < 0 || m > kMaxSideLength) throw Error("no permutation table for length " + std::to_string(m));
  return table[m];
}

Eigen::MatrixXd side_embeddings(const std::vector<std::string>& adjectives, const EmbeddingTable& table) {
  Eigen::MatrixXd out(table.dim(), static_cast<Eigen::Index>(adjectives.size()));
  for (std::size_t i = 0; i < adjectives.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = table.at(adjectives[i]);
  return out;
}

double phrase_log_prob(const Phrase& phrase, const EmbeddingTables& tables, const Params& params) {
  const EmbeddingTable& table = table_for(tables, phrase.language);
  double total = 0.0;
  if (phrase.left.size() >= 2)
    total += side_log_prob(side_classes(side_embeddings(phrase.left, table), params), params.w_left);
  if (phrase.right.size() >= 2)
    total += side_log_prob(side_classes(side_embeddings(phrase.right, table), params), params.w_right);
  return total;
}

SidePrediction predict_side(const std::vector<std::string>& adjectives, Side side, const EmbeddingTable& table,
                            const Params& params) {
  SidePrediction out;
  const int m = static_cast<int>(adjectives.size());
  if (m < 2) {
    out.adjectives = adjectives;
    for (int i = 0; i < m; ++i) out.order.push_back(static_cast<std::size_t>(i));
    if (m == 1) table.at(adjectives[0]);
    return out;
  }

  std::vector<std::string> sorted = adjectives;
  std::sort(sorted.begin(), sorted.end());
  const std::vector<double> log_probs =
      permutation_log_probs(side_classes(side_embeddings(sorted, table), params), params.interaction(side));

  // Several index permutations spell the same sequence when a form repeats.
  std::map<std::vector<std::string>, LogAccumulator<double>> candidates;
  const auto& perms = permutations(m);
  for (std::size_t p = 0; p < perms.size(); ++p) {
    std::vector<std::string> seq(m);
    for (int t = 0; t < m; ++t) seq[t] = sorted[perms[p][t]];
    candidates[std::move(seq)].add(log_probs[p]);
  }

  const std::vector<std::string>* best = nullptr;
  double best_lp = 0.0;
  for (const auto& [seq, acc] : candidates) {
    const double lp = acc.value();
    if (best == nullptr) {
      best = &seq;
      best_lp = lp;
      continue;
    }
    const double tol = kTieTolerance * std::max(1.0, std::abs(best_lp));
    if (lp > best_lp + tol) {
      best = &seq;
      best_lp = lp;
      out.tied = false;
    } else if (std::abs(lp - best_lp) <= tol) {
      out.tied = true;
    }
  }

  out.adjectives = *best;
  out.log_prob = best_lp;
  std::vector<bool> used(m, false);
  for (const std::string& a : out.adjectives) {
    for (int i = 0; i < m; ++i) {
      if (!used[i] && adjectives[i] == a) {
        used[i] = true;
        out.order.push_back(static_cast<std::size_t>(i));
        break;
      }
    }
  }
  return out;
}

OrderingPrediction predict_order(const std::vector<std::string>& left, const std::vector<std::string>& right,
                                 const EmbeddingTable& table, const Params& params) {
  if (left.size() + right.size() < 2) throw Error("need at least two adjectives to order");
  OrderingPrediction out;
  out.left = predict_side(left, Side::left, table, params);
  out.right = predict_side(right, Side::right, table, params);
  out.log_prob = out.left.log_prob + out.right.log_prob;
  out.tied = out.left.tied || out.right.tied;
  return out;
}

OrderingPrediction predict_order(const Phrase& phrase, const EmbeddingTables& tables, const Params& params) {
  return predict_order(phrase.left, phrase.right, table_for(tables, phrase.language), params);
}

}  // namespace adjorder
