#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace adjorder {

// One noun with the adjective runs on either side of it.
//
// `left` is in surface order, so its last element touches the noun.
// `right` is in surface order, so its first element touches the noun.
struct Phrase {
  std::string language;
  std::string noun;
  std::vector<std::string> left;
  std::vector<std::string> right;
  std::string source_id;

  std::size_t num_adjectives() const { return left.size() + right.size(); }

  friend bool operator==(const Phrase&, const Phrase&) = default;
};

// Line-delimited JSON, one object per phrase with the fields
// language, noun, left, right, source_id.
std::string to_json_line(const Phrase& phrase);
Phrase phrase_from_json_line(const std::string& line, std::size_t line_number = 0);

void write_phrases(std::ostream& out, const std::vector<Phrase>& phrases);
std::vector<Phrase> read_phrases(std::istream& in);

void write_phrases_file(const std::string& path, const std::vector<Phrase>& phrases);
std::vector<Phrase> read_phrases_file(const std::string& path);

}  // namespace adjorder
