#include "adjorder/phrase.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "adjorder/error.hpp"

namespace adjorder {

using nlohmann::json;

std::string to_json_line(const Phrase& phrase) {
  json j;
  j["language"] = phrase.language;
  j["noun"] = phrase.noun;
  j["left"] = phrase.left;
  j["right"] = phrase.right;
  j["source_id"] = phrase.source_id;
  return j.dump();
}

Phrase phrase_from_json_line(const std::string& line, std::size_t line_number) {
  try {
    const json j = json::parse(line);
    Phrase phrase;
    phrase.language = j.at("language").get<std::string>();
    phrase.noun = j.at("noun").get<std::string>();
    phrase.left = j.at("left").get<std::vector<std::string>>();
    phrase.right = j.at("right").get<std::vector<std::string>>();
    phrase.source_id = j.value("source_id", std::string());
    return phrase;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad phrase record: ") + e.what(), line_number);
  }
}

void write_phrases(std::ostream& out, const std::vector<Phrase>& phrases) {
  for (const Phrase& phrase : phrases) out << to_json_line(phrase) << '\n';
}

std::vector<Phrase> read_phrases(std::istream& in) {
  std::vector<Phrase> phrases;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    phrases.push_back(phrase_from_json_line(line, line_number));
  }
  return phrases;
}

void write_phrases_file(const std::string& path, const std::vector<Phrase>& phrases) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_phrases(out, phrases);
  if (!out) throw Error("failed writing " + path);
}

std::vector<Phrase> read_phrases_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_phrases(in);
}

}  // namespace adjorder
