#include "adjorder/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "adjorder/error.hpp"

namespace adjorder {
namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i == line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::string language, int dim) : language_(std::move(language)), dim_(dim) {
  if (dim <= 0) throw Error("embedding dimension must be positive");
}

bool EmbeddingTable::insert(const std::string& word, const Eigen::Ref<const Eigen::VectorXd>& vector) {
  if (vector.size() != dim_)
    throw Error("vector for '" + word + "' has " + std::to_string(vector.size()) + " components, expected " +
                std::to_string(dim_));
  if (index_.count(word)) {
    ++duplicates_ignored_;
    return false;
  }
  index_.emplace(word, words_.size());
  words_.push_back(word);
  data_.insert(data_.end(), vector.data(), vector.data() + dim_);
  return true;
}

std::optional<EmbeddingTable::ConstVector> EmbeddingTable::lookup(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return ConstVector(data_.data() + it->second * static_cast<std::size_t>(dim_), dim_);
}

EmbeddingTable::ConstVector EmbeddingTable::at(const std::string& word) const {
  auto v = lookup(word);
  if (!v) throw Error("'" + word + "' is not in the " + language_ + " embedding table");
  return *v;
}

EmbeddingTable load_embeddings(std::istream& in, const std::string& language, std::optional<std::size_t> limit) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty embedding file", 1);
  const auto header = split_spaces(line);
  std::size_t count = 0;
  int dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) || dim <= 0)
    throw ParseError("header must be \"count dim\"", 1);

  EmbeddingTable table(language, dim);
  const std::size_t wanted = limit ? std::min(count, *limit) : count;
  table.words_.reserve(wanted);
  table.data_.reserve(wanted * static_cast<std::size_t>(dim));

  Eigen::VectorXd vec(dim);
  std::size_t line_number = 1;
  while (table.size() < wanted && std::getline(in, line)) {
    ++line_number;
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (fields.size() != static_cast<std::size_t>(dim) + 1)
      throw ParseError("row has " + std::to_string(fields.size() - 1) + " values, header says " +
                           std::to_string(dim),
                       line_number);
    for (int k = 0; k < dim; ++k)
      if (!parse_number(fields[k + 1], vec[k]))
        throw ParseError("bad number '" + std::string(fields[k + 1]) + "'", line_number);
    table.insert(std::string(fields[0]), vec);
  }
  if (table.duplicates_ignored() > 0)
    spdlog::warn("{} embeddings: ignored {} duplicate rows", language, table.duplicates_ignored());
  return table;
}

EmbeddingTable load_embeddings_file(const std::string& path, const std::string& language,
                                    std::optional<std::size_t> limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return load_embeddings(in, language, limit);
}

const EmbeddingTable& table_for(const EmbeddingTables& tables, const std::string& language) {
  const auto it = tables.find(language);
  if (it == tables.end()) throw Error("no embedding table loaded for language '" + language + "'");
  return it->second;
}

std::vector<Phrase> filter_phrases_by_vocab(const std::vector<Phrase>& phrases, const EmbeddingTables& tables) {
  std::vector<Phrase> kept;
  for (const Phrase& phrase : phrases) {
    const EmbeddingTable& table = table_for(tables, phrase.language);
    const auto known = [&](const std::string& a) { return table.contains(a); };
    if (std::all_of(phrase.left.begin(), phrase.left.end(), known) &&
        std::all_of(phrase.right.begin(), phrase.right.end(), known))
      kept.push_back(phrase);
  }
  return kept;
}

}  // namespace adjorder
