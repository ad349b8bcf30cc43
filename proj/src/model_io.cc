#include "adjorder/model_io.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "adjorder/digest.hpp"

namespace adjorder {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols)
    throw Error(std::string("model matrix '") + name + "' has the wrong shape");
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw Error(std::string("model matrix '") + name + "' has the wrong number of values");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

json params_to_json(const Params& params) {
  const ModelConfig& c = params.config;
  return json{{"config",
               {{"num_classes", c.num_classes},
                {"dim", c.dim},
                {"w_mode", w_mode_name(c.w_mode)},
                {"exact_side_limit", c.exact_side_limit},
                {"prune_top_m", c.prune_top_m}}},
              {"class_map", matrix_to_json(params.class_map)},
              {"w_left", matrix_to_json(params.w_left)},
              {"w_right", matrix_to_json(params.w_right)}};
}

}  // namespace

std::string serialize_model(const ModelFile& model) {
  json j = params_to_json(model.params);
  j["format"] = "adjorder-model";
  j["format_version"] = kModelFormatVersion;
  if (model.variant) j["variant"] = variant_name(*model.variant);
  if (!model.embeddings.empty()) j["embeddings"] = model.embeddings;
  return j.dump(1) + "\n";
}

ModelFile deserialize_model(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != "adjorder-model") throw Error("not an adjorder model file");
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw Error("unsupported model format version " + j.at("format_version").dump());

    const json& jc = j.at("config");
    ModelConfig config;
    config.num_classes = jc.at("num_classes").get<int>();
    config.dim = jc.at("dim").get<int>();
    config.w_mode = parse_w_mode(jc.at("w_mode").get<std::string>());
    config.exact_side_limit = jc.at("exact_side_limit").get<int>();
    config.prune_top_m = jc.at("prune_top_m").get<int>();
    config.validate();

    ModelFile model;
    model.params.config = config;
    model.params.class_map = matrix_from_json(j.at("class_map"), config.num_classes, config.dim, "class_map");
    model.params.w_left = matrix_from_json(j.at("w_left"), config.num_classes, config.num_classes, "w_left");
    model.params.w_right = matrix_from_json(j.at("w_right"), config.num_classes, config.num_classes, "w_right");
    if (config.w_mode == WMode::fixed_total_order &&
        (model.params.w_left != precedence_matrix<double>(config.num_classes, Side::left) ||
         model.params.w_right != precedence_matrix<double>(config.num_classes, Side::right)))
      throw Error("fixed_total_order model carries non-canonical interaction matrices");
    if (j.contains("variant")) model.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("embeddings")) model.embeddings = j.at("embeddings").get<std::map<std::string, std::string>>();
    return model;
  } catch (const json::exception& e) {
    throw Error(std::string("bad model file: ") + e.what());
  }
}

void write_model_file(const std::string& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize_model(model);
  if (!out) throw Error("failed writing " + path);
}

ModelFile read_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return deserialize_model(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

std::string params_digest(const Params& params) { return sha256_hex(params_to_json(params).dump()); }

}  // namespace adjorder
