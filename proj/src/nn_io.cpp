#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rayfp/nn.hpp"

namespace rayfp {

using nlohmann::json;

std::vector<int> parse_arch(const std::string& text) {
  std::vector<int> widths;
  std::string item;
  for (char ch : text + ",") {
    if (ch == ',' || ch == '-') {
      if (item.empty()) throw Error(Errc::invalid_parameter, "malformed architecture '" + text + "'");
      std::size_t used = 0;
      int w = 0;
      try {
        w = std::stoi(item, &used);
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used != item.size() || w < 1) throw Error(Errc::invalid_parameter, "malformed architecture '" + text + "'");
      widths.push_back(w);
      item.clear();
    } else {
      item.push_back(ch);
    }
  }
  return widths;
}

std::string format_arch(const std::vector<int>& hidden, char sep) {
  std::string out;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i) out.push_back(sep);
    out += std::to_string(hidden[i]);
  }
  return out;
}

std::string model_to_json(const MlpParams<double>& params, const std::optional<ModelMeta>& meta) {
  json layers = json::array();
  for (const auto& layer : params.layers) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(layer.weight.cols()));
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) row[static_cast<std::size_t>(j)] = layer.weight(i, j);
      rows.push_back(row);
    }
    layers.push_back({{"w", rows}, {"b", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}});
  }
  json doc = {{"spec",
               {{"input_dim", params.spec.input_dim},
                {"hidden", params.spec.hidden},
                {"output_dim", params.spec.output_dim},
                {"hidden_activation", "relu"},
                {"output_activation", "softmax"}}},
              {"layers", layers}};
  if (meta) {
    doc["meta"] = {{"dims", meta->dims},
                   {"ray_length_px", meta->ray_length_px},
                   {"gamma", meta->gamma},
                   {"direction_scheme", meta->direction_scheme},
                   {"offset_angle", meta->offset_angle},
                   {"class_names", meta->class_names}};
  }
  return doc.dump() + "\n";
}

SavedModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("model file: ") + e.what());
  }
  try {
    MlpSpec spec;
    const auto& js = doc.at("spec");
    spec.input_dim = js.at("input_dim").get<int>();
    spec.hidden = js.at("hidden").get<std::vector<int>>();
    spec.output_dim = js.at("output_dim").get<int>();
    if (js.value("hidden_activation", "relu") != "relu" || js.value("output_activation", "softmax") != "softmax") {
      throw Error(Errc::schema_error, "only relu hidden layers with a softmax output are supported");
    }
    SavedModel model{MlpParams<double>::zeros(spec), std::nullopt};
    const auto& layers = doc.at("layers");
    if (layers.size() != model.params.layers.size()) {
      throw Error(Errc::shape_error, "model has " + std::to_string(layers.size()) + " layers, spec implies " +
                                         std::to_string(model.params.layers.size()));
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& layer = model.params.layers[l];
      const auto rows = layers[l].at("w").get<std::vector<std::vector<double>>>();
      const auto bias = layers[l].at("b").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(rows.size()) != layer.weight.rows() ||
          static_cast<Eigen::Index>(bias.size()) != layer.bias.size()) {
        throw Error(Errc::shape_error, "layer " + std::to_string(l) + " does not match the spec");
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != layer.weight.cols()) {
          throw Error(Errc::shape_error, "layer " + std::to_string(l) + " row " + std::to_string(i) + " has wrong width");
        }
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
          layer.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
      }
      for (std::size_t i = 0; i < bias.size(); ++i) layer.bias[static_cast<Eigen::Index>(i)] = bias[i];
    }
    if (doc.contains("meta")) {
      const auto& jm = doc.at("meta");
      ModelMeta meta;
      meta.dims = jm.at("dims").get<int>();
      meta.ray_length_px = jm.at("ray_length_px").get<int>();
      meta.gamma = jm.at("gamma").get<std::string>();
      meta.direction_scheme = jm.at("direction_scheme").get<std::string>();
      meta.offset_angle = jm.at("offset_angle").get<double>();
      meta.class_names = jm.at("class_names").get<std::vector<std::string>>();
      model.meta = std::move(meta);
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(Errc::schema_error, std::string("model file: ") + e.what());
  }
}

void save_model(const std::string& path, const MlpParams<double>& params, const std::optional<ModelMeta>& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path + " for writing");
  out << model_to_json(params, meta);
  if (!out) throw Error(Errc::io_error, "failed writing " + path);
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace rayfp
