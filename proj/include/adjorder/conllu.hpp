#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "adjorder/phrase.hpp"

namespace adjorder {

struct Token {
  int index = 1;  // 1-based position in the sentence
  std::string form;
  std::string upos;
  int head = 0;  // 0 is the root
  std::string deprel;
};

struct Sentence {
  std::string id;  // from "# sent_id = ..." when present, else the ordinal
  std::vector<Token> tokens;
};

struct ExtractionConfig {
  // Adjectives must depend on the noun via amod. When a run contains an
  // adjective that does not, the whole phrase is discarded so that the
  // output is always a subset of the adjacency-only extraction.
  bool require_amod = true;
  int min_side = 2;
  int max_total_adjectives = 6;
  bool lowercase = true;
  // Discard phrases in which an adjective form repeats.
  bool drop_duplicate_adjectives = true;

  void validate() const;
};

// Multiword-token ranges ("3-4") and empty nodes ("3.1") are skipped.
// Throws ParseError naming the line for a token line without 10 columns.
std::vector<Sentence> parse_conllu(std::istream& in);
std::vector<Sentence> parse_conllu_file(const std::string& path);

std::vector<Phrase> extract_phrases(const std::vector<Sentence>& sentences,
                                    const ExtractionConfig& config,
                                    const std::string& language,
                                    const std::string& source = "");

// Unicode-aware lowercasing of a UTF-8 string.
std::string lowercase_utf8(const std::string& text);

}  // namespace adjorder
