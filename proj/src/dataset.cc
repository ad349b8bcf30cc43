#include "adjorder/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "adjorder/error.hpp"
#include "adjorder/rng.hpp"

namespace adjorder {
namespace {

using TypeKey = std::pair<std::string, std::string>;  // (language, form)

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return order;
}

std::vector<Phrase> gather(const std::vector<Phrase>& phrases, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  std::vector<Phrase> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(phrases[i]);
  return out;
}

// Draws the dev set and returns the indices left over, in shuffled order.
std::vector<std::size_t> carve_dev(const std::vector<Phrase>& phrases, const SplitSpec& spec, Rng& rng,
                                   DatasetSplit& split) {
  std::vector<std::size_t> order = shuffled_indices(phrases.size(), rng);
  if (!spec.dev_count) return order;
  if (*spec.dev_count >= phrases.size())
    throw Error("dev set of " + std::to_string(*spec.dev_count) + " does not fit a corpus of " +
                std::to_string(phrases.size()));
  const auto cut = order.begin() + static_cast<std::ptrdiff_t>(*spec.dev_count);
  split.dev = gather(phrases, std::vector<std::size_t>(order.begin(), cut));
  return std::vector<std::size_t>(cut, order.end());
}

template <typename F>
void for_each_adjective(const Phrase& phrase, F&& f) {
  for (const std::string& a : phrase.left) f(a);
  for (const std::string& a : phrase.right) f(a);
}

}  // namespace

std::string split_mode_name(SplitMode mode) { return mode == SplitMode::token ? "token" : "type"; }

SplitMode parse_split_mode(const std::string& name) {
  if (name == "token") return SplitMode::token;
  if (name == "type") return SplitMode::type;
  throw Error("unknown split mode '" + name + "'");
}

DatasetSplit split_by_token(const std::vector<Phrase>& phrases, const SplitSpec& spec) {
  if (spec.mode != SplitMode::token) throw Error("split_by_token needs a token-mode spec");
  DatasetSplit split;
  split.spec = spec;
  Rng rng(spec.seed);
  const std::vector<std::size_t> rest = carve_dev(phrases, spec, rng, split);

  std::size_t train_count = 0;
  if (spec.train <= 1.0) {
    if (!(spec.train > 0.0 && spec.train < 1.0)) throw Error("train fraction must lie in (0, 1)");
    train_count = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(rest.size())));
  } else {
    if (spec.train != std::floor(spec.train)) throw Error("train count must be an integer");
    train_count = static_cast<std::size_t>(spec.train);
  }
  if (train_count == 0 || train_count >= rest.size())
    throw Error("train size " + std::to_string(train_count) + " leaves no room in " +
                std::to_string(rest.size()) + " phrases");

  const auto cut = rest.begin() + static_cast<std::ptrdiff_t>(train_count);
  split.train = gather(phrases, std::vector<std::size_t>(rest.begin(), cut));
  split.test = gather(phrases, std::vector<std::size_t>(cut, rest.end()));
  return split;
}

DatasetSplit split_by_type(const std::vector<Phrase>& phrases, const SplitSpec& spec) {
  if (spec.mode != SplitMode::type) throw Error("split_by_type needs a type-mode spec");
  if (!(spec.train > 0.0 && spec.train < 1.0)) throw Error("type fraction must lie in (0, 1)");
  DatasetSplit split;
  split.spec = spec;
  Rng rng(spec.seed);
  std::vector<std::size_t> rest(phrases.size());
  std::iota(rest.begin(), rest.end(), 0);
  if (spec.dev_count) rest = carve_dev(phrases, spec, rng, split);

  std::set<TypeKey> type_set;
  for (std::size_t i : rest)
    for_each_adjective(phrases[i], [&](const std::string& a) { type_set.emplace(phrases[i].language, a); });
  if (type_set.size() < 2) throw Error("type split needs at least two adjective types");

  std::vector<TypeKey> types(type_set.begin(), type_set.end());
  rng.shuffle(types);
  const auto keep = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(types.size())));
  const std::set<TypeKey> train_types(types.begin(), types.begin() + static_cast<std::ptrdiff_t>(keep));

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i : rest) {
    bool all_known = true;
    for_each_adjective(phrases[i], [&](const std::string& a) {
      all_known = all_known && train_types.count({phrases[i].language, a}) != 0;
    });
    (all_known ? train_idx : test_idx).push_back(i);
  }
  split.train = gather(phrases, std::move(train_idx));
  split.test = gather(phrases, std::move(test_idx));
  check_type_split(split);
  return split;
}

DatasetSplit split_dataset(const std::vector<Phrase>& phrases, const SplitSpec& spec) {
  return spec.mode == SplitMode::token ? split_by_token(phrases, spec) : split_by_type(phrases, spec);
}

std::vector<Phrase> sample_phrases(const std::vector<Phrase>& phrases, std::size_t count, std::uint64_t seed) {
  if (count > phrases.size())
    throw Error("cannot sample " + std::to_string(count) + " of " + std::to_string(phrases.size()) + " phrases");
  Rng rng(seed);
  std::vector<std::size_t> order = shuffled_indices(phrases.size(), rng);
  order.resize(count);
  return gather(phrases, std::move(order));
}

void check_type_split(const DatasetSplit& split) {
  std::set<TypeKey> seen;
  for (const Phrase& p : split.train)
    for_each_adjective(p, [&](const std::string& a) { seen.emplace(p.language, a); });
  for (const Phrase& p : split.test) {
    bool novel = false;
    for_each_adjective(p, [&](const std::string& a) { novel = novel || seen.count({p.language, a}) == 0; });
    if (!novel) throw Error("type split violated: test phrase " + p.source_id + " has only training adjectives");
  }
}

DatasetStats dataset_stats(const std::vector<Phrase>& phrases) {
  DatasetStats stats;
  std::set<TypeKey> types;
  for (const Phrase& p : phrases) {
    ++stats.phrases;
    ++stats.by_k[p.num_adjectives()];
    ++stats.left_lengths[p.left.size()];
    ++stats.right_lengths[p.right.size()];
    for_each_adjective(p, [&](const std::string& a) { types.emplace(p.language, a); });
  }
  stats.adjective_types = types.size();
  return stats;
}

}  // namespace adjorder
