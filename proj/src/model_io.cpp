#include "svehnn/model_io.hpp"

#include <fstream>

namespace svehnn {

using nlohmann::json;

namespace {

json matrix_to_json(const DenseLayerParams& p) {
  json rows = json::array();
  for (int l = 0; l < p.in_dim; ++l) {
    json row = json::array();
    for (int m = 0; m < p.out_dim; ++m) row.push_back(p.w(l, m));
    rows.push_back(std::move(row));
  }
  return rows;
}

json dense_to_json(const DenseLayerParams& p) {
  return json{{"W", matrix_to_json(p)}, {"b", p.bias}};
}

DenseLayerParams dense_from_json(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("W") || !j.contains("b"))
    throw ParseError(std::string(what) + ": expected {W, b}");
  const json& rows = j.at("W");
  if (!rows.is_array() || rows.empty())
    throw ParseError(std::string(what) + ": W must be a non-empty array");
  DenseLayerParams p;
  p.in_dim = static_cast<int>(rows.size());
  p.out_dim = static_cast<int>(rows.at(0).size());
  p.weights.reserve(static_cast<std::size_t>(p.in_dim) * p.out_dim);
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != p.out_dim)
      throw ParseError(std::string(what) + ": ragged weight rows");
    for (const auto& v : row) p.weights.push_back(v.get<double>());
  }
  p.bias = j.at("b").get<Vec>();
  return p;
}

json bn_to_json(const BatchNormParams& p) {
  return json{{"gamma", p.gamma},
              {"beta", p.beta},
              {"running_mean", p.running_mean},
              {"running_var", p.running_var},
              {"epsilon", p.epsilon}};
}

BatchNormParams bn_from_json(const json& j) {
  BatchNormParams p;
  p.gamma = j.at("gamma").get<Vec>();
  p.beta = j.at("beta").get<Vec>();
  p.running_mean = j.at("running_mean").get<Vec>();
  p.running_var = j.at("running_var").get<Vec>();
  p.epsilon = j.at("epsilon").get<double>();
  return p;
}

}  // namespace

json model_to_json(const WdpnModel& model) {
  json layers = json::array();
  for (const auto& layer : model.point_mlp) {
    json l = dense_to_json(layer.dense);
    l["batchnorm"] = bn_to_json(layer.bn);
    l["relu"] = layer.relu;
    layers.push_back(std::move(l));
  }
  return json{{"format_version", kModelFormatVersion},
              {"K", model.k_points},
              {"D", model.d_tabular},
              {"point_mlp", std::move(layers)},
              {"fusion", dense_to_json(model.fusion)}};
}

WdpnModel model_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ParseError("model: expected a JSON object");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw ParseError("model: unsupported format_version " +
                       std::to_string(version));
    WdpnModel model;
    model.k_points = j.at("K").get<int>();
    model.d_tabular = j.at("D").get<int>();
    for (const auto& l : j.at("point_mlp")) {
      PointMlpLayer layer;
      layer.dense = dense_from_json(l, "point_mlp layer");
      layer.bn = bn_from_json(l.at("batchnorm"));
      layer.relu = l.at("relu").get<bool>();
      model.point_mlp.push_back(std::move(layer));
    }
    model.fusion = dense_from_json(j.at("fusion"), "fusion");
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const WdpnModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open for writing: " + path);
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw IntegrityError("write failed: " + path);
}

WdpnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

std::string model_checksum(const WdpnModel& model) {
  return checksum_string(fnv1a64(model_to_json(model).dump()));
}

}  // namespace svehnn
