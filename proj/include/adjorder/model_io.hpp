#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "adjorder/model.hpp"

namespace adjorder {

inline constexpr int kModelFormatVersion = 1;

// A saved model: parameters plus the variant and the embedding tables it
// was trained with (language -> path), used as defaults when predicting.
struct ModelFile {
  Params params;
  std::optional<Variant> variant;
  std::map<std::string, std::string> embeddings;
};

// JSON document; matrices are stored row-major and every value is written
// with enough digits to round-trip exactly.
std::string serialize_model(const ModelFile& model);
ModelFile deserialize_model(const std::string& text);

void write_model_file(const std::string& path, const ModelFile& model);
ModelFile read_model_file(const std::string& path);

std::string params_digest(const Params& params);

}  // namespace adjorder
