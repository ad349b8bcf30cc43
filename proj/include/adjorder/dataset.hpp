#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adjorder/phrase.hpp"

namespace adjorder {

enum class SplitMode { token, type };

// In token mode `train` is a fraction when at most 1 (it must lie in (0, 1))
// and a phrase count otherwise. In type mode it is the fraction of adjective
// types.
struct SplitSpec {
  SplitMode mode = SplitMode::token;
  double train = 0.9;
  std::optional<std::size_t> dev_count;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  std::vector<Phrase> train;
  std::vector<Phrase> test;
  std::optional<std::vector<Phrase>> dev;
  SplitSpec spec;
};

// The dev set, when requested, is drawn first; the remainder is then split.
DatasetSplit split_by_token(const std::vector<Phrase>& phrases, const SplitSpec& spec);
DatasetSplit split_by_type(const std::vector<Phrase>& phrases, const SplitSpec& spec);
DatasetSplit split_dataset(const std::vector<Phrase>& phrases, const SplitSpec& spec);

// Uniform sample of `count` phrases without replacement, kept in corpus order.
std::vector<Phrase> sample_phrases(const std::vector<Phrase>& phrases, std::size_t count,
                                   std::uint64_t seed);

// Throws if a test phrase has no adjective outside the training vocabulary.
void check_type_split(const DatasetSplit& split);

struct DatasetStats {
  std::size_t phrases = 0;
  std::size_t adjective_types = 0;          // distinct (language, form) pairs
  std::map<std::size_t, std::size_t> by_k;  // total adjectives per phrase
  std::map<std::size_t, std::size_t> left_lengths;
  std::map<std::size_t, std::size_t> right_lengths;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(const std::vector<Phrase>& phrases);

std::string split_mode_name(SplitMode mode);
SplitMode parse_split_mode(const std::string& name);

}  // namespace adjorder
