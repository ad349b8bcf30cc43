#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "adjorder/phrase.hpp"

namespace adjorder {

// Word vectors for one language, all of the same dimension.
class EmbeddingTable {
 public:
  using ConstVector = Eigen::Map<const Eigen::VectorXd>;

  EmbeddingTable() = default;
  EmbeddingTable(std::string language, int dim);

  const std::string& language() const { return language_; }
  int dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  std::size_t duplicates_ignored() const { return duplicates_ignored_; }

  // Returns false (and keeps the first vector) when `word` already exists.
  bool insert(const std::string& word, const Eigen::Ref<const Eigen::VectorXd>& vector);

  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  std::optional<ConstVector> lookup(const std::string& word) const;
  // Throws Error when the word is missing.
  ConstVector at(const std::string& word) const;

  const std::vector<std::string>& words() const { return words_; }

 private:
  std::string language_;
  int dim_ = 0;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t duplicates_ignored_ = 0;

  friend EmbeddingTable load_embeddings(std::istream&, const std::string&,
                                        std::optional<std::size_t>);
};

using EmbeddingTables = std::map<std::string, EmbeddingTable>;

// Text format: a "count dim" header line, then "word v1 ... v_dim" rows.
// At most `limit` distinct words are kept.
EmbeddingTable load_embeddings(std::istream& in, const std::string& language,
                               std::optional<std::size_t> limit = std::nullopt);
EmbeddingTable load_embeddings_file(const std::string& path, const std::string& language,
                                    std::optional<std::size_t> limit = std::nullopt);

// Keeps, in order, the phrases whose adjectives on both sides are all in the
// table for the phrase's language. The noun is never looked up.
std::vector<Phrase> filter_phrases_by_vocab(const std::vector<Phrase>& phrases,
                                            const EmbeddingTables& tables);

const EmbeddingTable& table_for(const EmbeddingTables& tables, const std::string& language);

}  // namespace adjorder
