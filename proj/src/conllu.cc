#include "adjorder/conllu.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <string_view>

#include <unicode/unistr.h>

#include "adjorder/error.hpp"

namespace adjorder {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

bool parse_int(std::string_view text, int& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

bool is_amod_of(const Token& adjective, const Token& noun) {
  if (adjective.head != noun.index) return false;
  const std::string_view rel(adjective.deprel);
  return rel.substr(0, rel.find(':')) == "amod";
}

}  // namespace

void ExtractionConfig::validate() const {
  if (min_side < 2) throw Error("min_side must be at least 2");
  if (max_total_adjectives < min_side) throw Error("max_total_adjectives must be at least min_side");
}

std::vector<Sentence> parse_conllu(std::istream& in) {
  std::vector<Sentence> sentences;
  Sentence current;
  std::string line;
  std::size_t line_number = 0;

  auto flush = [&] {
    if (!current.tokens.empty()) {
      if (current.id.empty()) current.id = std::to_string(sentences.size() + 1);
      sentences.push_back(std::move(current));
    }
    current = Sentence{};
  };

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      constexpr std::string_view kSentId = "# sent_id = ";
      if (line.rfind(kSentId, 0) == 0) current.id = line.substr(kSentId.size());
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 10)
      throw ParseError("expected 10 tab-separated columns, found " + std::to_string(fields.size()),
                       line_number);
    const std::string_view id = fields[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;

    Token token;
    if (!parse_int(id, token.index) || token.index < 1)
      throw ParseError("bad token index '" + std::string(id) + "'", line_number);
    if (!parse_int(fields[6], token.head) || token.head < 0)
      throw ParseError("bad head '" + std::string(fields[6]) + "'", line_number);
    token.form = fields[1];
    token.upos = fields[3];
    if (token.upos.empty() || token.upos == "_") throw ParseError("missing UPOS", line_number);
    token.deprel = fields[7];
    current.tokens.push_back(std::move(token));
  }
  flush();
  return sentences;
}

std::vector<Sentence> parse_conllu_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return parse_conllu(in);
}

std::string lowercase_utf8(const std::string& text) {
  std::string out;
  icu::UnicodeString::fromUTF8(text).toLower().toUTF8String(out);
  return out;
}

std::vector<Phrase> extract_phrases(const std::vector<Sentence>& sentences, const ExtractionConfig& config,
                                    const std::string& language, const std::string& source) {
  config.validate();
  const auto side_ok = [&](std::size_t n) { return n >= static_cast<std::size_t>(config.min_side); };
  auto normalize = [&](const std::string& form) {
    return config.lowercase ? lowercase_utf8(form) : form;
  };

  std::vector<Phrase> phrases;
  for (const Sentence& sentence : sentences) {
    const std::vector<Token>& tokens = sentence.tokens;
    for (std::size_t n = 0; n < tokens.size(); ++n) {
      const Token& noun = tokens[n];
      if (noun.upos != "NOUN") continue;

      std::size_t first = n;
      while (first > 0 && tokens[first - 1].upos == "ADJ") --first;
      std::size_t last = n + 1;
      while (last < tokens.size() && tokens[last].upos == "ADJ") ++last;

      const std::size_t left_len = n - first;
      const std::size_t right_len = last - n - 1;
      if (!side_ok(left_len) && !side_ok(right_len)) continue;
      if (left_len + right_len > static_cast<std::size_t>(config.max_total_adjectives)) continue;

      bool keep = true;
      Phrase phrase;
      phrase.language = language;
      phrase.noun = normalize(noun.form);
      for (std::size_t i = first; i < last; ++i) {
        if (i == n) continue;
        if (config.require_amod && !is_amod_of(tokens[i], noun)) {
          keep = false;
          break;
        }
        (i < n ? phrase.left : phrase.right).push_back(normalize(tokens[i].form));
      }
      if (!keep) continue;

      if (config.drop_duplicate_adjectives) {
        std::set<std::string> seen(phrase.left.begin(), phrase.left.end());
        seen.insert(phrase.right.begin(), phrase.right.end());
        if (seen.size() != phrase.num_adjectives()) continue;
      }
      phrase.source_id = (source.empty() ? std::string() : source + "#") + sentence.id + ":" +
                         std::to_string(noun.index);
      phrases.push_back(std::move(phrase));
    }
  }
  return phrases;
}

}  // namespace adjorder
