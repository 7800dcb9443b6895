#include "capsat/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace capsat {

using nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("format_double: non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string model_to_json(const MlpModel& model) {
  std::ostringstream out;
  out << "{\"format_version\": " << kWeightFormatVersion << ", \"activation\": \""
      << to_string(model.activation()) << "\", \"dims\": [";
  const auto dims = model.dims();
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? ", " : "") << dims[i];
  out << "], \"layers\": [";
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto& layer = model.layers()[l];
    out << (l ? ",\n  " : "\n  ") << '{';
    if (layer.sparse) {
      out << "\"w_coo\": [";
      bool first = true;
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
          if (layer.weight(i, j) == 0.0) continue;
          out << (first ? "" : ", ") << "{\"i\": " << i << ", \"j\": " << j
              << ", \"value\": " << format_double(layer.weight(i, j)) << '}';
          first = false;
        }
      out << ']';
    } else {
      out << "\"w\": [";
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
          out << (i || j ? ", " : "") << format_double(layer.weight(i, j));
      out << ']';
    }
    out << ", \"b\": [";
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
      out << (i ? ", " : "") << format_double(layer.bias[i]);
    out << "]}";
  }
  out << "\n]}\n";
  return out.str();
}

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path, std::string("missing key '") + key + "'");
  return *it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path, "expected a number");
  return v.get<double>();
}

long long index_at(const json& v, const std::string& path, long long bound) {
  if (!v.is_number_integer()) throw ParseError(path, "expected an integer");
  const auto i = v.get<long long>();
  if (i < 0 || i >= bound) throw ParseError(path, "index out of range");
  return i;
}

}  // namespace

MlpModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  const auto& version = require(doc, "format_version", "$");
  if (!version.is_number_integer() || version.get<int>() != kWeightFormatVersion)
    throw ParseError("$.format_version", "unsupported format version");
  const auto& act = require(doc, "activation", "$");
  if (!act.is_string()) throw ParseError("$.activation", "expected a string");
  Activation activation;
  try {
    activation = activation_from_string(act.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ParseError("$.activation", e.what());
  }
  const auto& dims_json = require(doc, "dims", "$");
  if (!dims_json.is_array() || dims_json.size() < 2)
    throw ParseError("$.dims", "expected an array of at least two dimensions");
  std::vector<long long> dims;
  for (std::size_t i = 0; i < dims_json.size(); ++i) {
    const std::string path = "$.dims[" + std::to_string(i) + "]";
    if (!dims_json[i].is_number_integer() || dims_json[i].get<long long>() <= 0)
      throw ParseError(path, "expected a positive integer");
    dims.push_back(dims_json[i].get<long long>());
  }
  const auto& layers_json = require(doc, "layers", "$");
  if (!layers_json.is_array() || layers_json.size() != dims.size() - 1)
    throw ParseError("$.layers", "expected " + std::to_string(dims.size() - 1) + " layers");

  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < layers_json.size(); ++l) {
    const std::string lp = "$.layers[" + std::to_string(l) + "]";
    const auto& lj = layers_json[l];
    if (!lj.is_object()) throw ParseError(lp, "expected an object");
    const long long rows = dims[l + 1];
    const long long cols = dims[l];
    DenseLayer layer;
    layer.weight = Eigen::MatrixXd::Zero(rows, cols);
    if (lj.contains("w") == lj.contains("w_coo"))
      throw ParseError(lp, "expected exactly one of 'w' or 'w_coo'");
    if (lj.contains("w")) {
      const auto& w = lj["w"];
      if (!w.is_array() || static_cast<long long>(w.size()) != rows * cols)
        throw ParseError(lp + ".w", "expected " + std::to_string(rows * cols) + " numbers");
      for (long long k = 0; k < rows * cols; ++k)
        layer.weight(k / cols, k % cols) = number_at(w[k], lp + ".w[" + std::to_string(k) + "]");
    } else {
      layer.sparse = true;
      const auto& coo = lj["w_coo"];
      if (!coo.is_array()) throw ParseError(lp + ".w_coo", "expected an array");
      for (std::size_t k = 0; k < coo.size(); ++k) {
        const std::string ep = lp + ".w_coo[" + std::to_string(k) + "]";
        const auto i = index_at(require(coo[k], "i", ep), ep + ".i", rows);
        const auto j = index_at(require(coo[k], "j", ep), ep + ".j", cols);
        layer.weight(i, j) = number_at(require(coo[k], "value", ep), ep + ".value");
      }
    }
    const auto& b = require(lj, "b", lp);
    if (!b.is_array() || static_cast<long long>(b.size()) != rows)
      throw ParseError(lp + ".b", "expected " + std::to_string(rows) + " numbers");
    layer.bias.resize(rows);
    for (long long k = 0; k < rows; ++k)
      layer.bias[k] = number_at(b[k], lp + ".b[" + std::to_string(k) + "]");
    layers.push_back(std::move(layer));
  }
  try {
    return MlpModel(activation, std::move(layers));
  } catch (const std::invalid_argument& e) {
    throw ParseError("$", e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model));
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace capsat
