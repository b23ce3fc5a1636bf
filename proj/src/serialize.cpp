#include "pinet/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "pinet/error.hpp"

namespace pinet {

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

json layers_to_json(const Mlp& core) {
  json layers = json::array();
  for (const auto& L : core.layers()) {
    layers.push_back({{"in", L.in},
                      {"out", L.out},
                      {"activation", L.relu ? "relu" : "identity"},
                      {"weights", L.weights},
                      {"bias", L.bias}});
  }
  return layers;
}

Mlp layers_from_json(const json& arr) {
  if (!arr.is_array()) throw FormatError("'layers' must be an array");
  std::vector<DenseLayer> layers;
  for (const auto& j : arr) {
    DenseLayer L;
    L.in = field<std::size_t>(j, "in");
    L.out = field<std::size_t>(j, "out");
    const auto act = field<std::string>(j, "activation");
    if (act != "relu" && act != "identity") throw FormatError("unknown activation '" + act + "'");
    L.relu = act == "relu";
    L.weights = field<std::vector<double>>(j, "weights");
    L.bias = field<std::vector<double>>(j, "bias");
    layers.push_back(std::move(L));
  }
  try {
    return Mlp(std::move(layers));
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
}

json architecture_json(const Mlp& core, std::size_t input_dim, std::size_t outputs) {
  json hidden = json::array();
  for (std::size_t l = 0; l + 1 < core.layers().size(); ++l) hidden.push_back(core.layers()[l].out);
  return {{"input_dim", input_dim}, {"hidden", hidden}, {"outputs", outputs}, {"hidden_activation", "relu"}};
}

json training_json(const TrainingInfo& t) {
  return {{"tau", t.tau}, {"seed", t.seed}, {"epochs", t.epochs}, {"risk", t.risk}};
}

TrainingInfo training_from_json(const json& j) {
  TrainingInfo t;
  t.tau = field<double>(j, "tau");
  t.seed = field<std::uint64_t>(j, "seed");
  t.epochs = field<int>(j, "epochs");
  t.risk = field<std::vector<double>>(j, "risk");
  return t;
}

}  // namespace

json ext_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double ext_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw FormatError("expected a number or one of \"inf\", \"-inf\", \"nan\"");
}

void check_version(const json& doc, const char* kind) {
  if (!doc.is_object() || !doc.contains("format_version"))
    throw FormatError("artifact has no format_version");
  const auto& v = doc.at("format_version");
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion)
    throw FormatError("unsupported format_version " + v.dump() + " (expected " +
                      std::to_string(kFormatVersion) + ")");
  if (kind) {
    const auto k = field<std::string>(doc, "kind");
    if (k != kind) throw FormatError("expected artifact kind '" + std::string(kind) + "', found '" + k + "'");
  }
}

json to_json(const PiNetwork& net) {
  json doc = {{"format_version", kFormatVersion}, {"kind", "pi_network"}, {"head", "monotone_relu"}};
  doc["trivial"] = net.is_trivial();
  if (net.is_trivial()) {
    doc["architecture"] = {{"input_dim", net.input_dim()}, {"hidden", json::array()}, {"outputs", 3},
                           {"hidden_activation", "relu"}};
    doc["layers"] = json::array();
  } else {
    doc["architecture"] = architecture_json(net.core(), net.input_dim(), 3);
    doc["layers"] = layers_to_json(net.core());
  }
  doc["training"] = training_json(net.training());
  return doc;
}

PiNetwork pi_network_from_json(const json& doc) {
  check_version(doc, "pi_network");
  if (field<std::string>(doc, "head") != "monotone_relu") throw FormatError("unknown head tag");
  if (field<bool>(doc, "trivial"))
    return PiNetwork::trivial(field<std::size_t>(field<json>(doc, "architecture"), "input_dim"));
  try {
    return PiNetwork(layers_from_json(field<json>(doc, "layers")), training_from_json(field<json>(doc, "training")));
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
}

json to_json(const GaussianNetwork& net) {
  json doc = {{"format_version", kFormatVersion}, {"kind", "gaussian_network"}, {"head", "gaussian_softplus"}};
  doc["architecture"] = architecture_json(net.core(), net.input_dim(), 2);
  doc["layers"] = layers_to_json(net.core());
  doc["training"] = training_json(net.training());
  return doc;
}

GaussianNetwork gaussian_network_from_json(const json& doc) {
  check_version(doc, "gaussian_network");
  if (field<std::string>(doc, "head") != "gaussian_softplus") throw FormatError("unknown head tag");
  try {
    return GaussianNetwork(layers_from_json(field<json>(doc, "layers")),
                           training_from_json(field<json>(doc, "training")));
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
}

json to_json(const Standardization& s) { return {{"mean", s.mean}, {"sd", s.sd}}; }

Standardization standardization_from_json(const json& j) {
  Standardization s{field<std::vector<double>>(j, "mean"), field<std::vector<double>>(j, "sd")};
  if (s.mean.size() != s.sd.size()) throw FormatError("standardization: mean and sd differ in length");
  return s;
}

json to_json(const SyntheticSpec& s) { return {{"dim", s.dim}, {"signal", s.signal}, {"seed", s.seed}}; }

SyntheticSpec synthetic_spec_from_json(const json& j) {
  return {field<std::size_t>(j, "dim"), field<std::size_t>(j, "signal"), field<std::uint64_t>(j, "seed")};
}

json to_json(const ConformalCalibration& c) {
  return {{"method", "conf-nn"}, {"c_hat", ext_to_json(c.c_hat)}, {"alpha", c.alpha}, {"n2", c.n2}, {"rank", c.rank}};
}

ConformalCalibration conformal_from_json(const json& j) {
  ConformalCalibration c;
  c.c_hat = ext_from_json(field<json>(j, "c_hat"));
  c.alpha = field<double>(j, "alpha");
  c.n2 = field<std::size_t>(j, "n2");
  c.rank = field<std::size_t>(j, "rank");
  return c;
}

json to_json(const FixedWidthCalibration& c) {
  return {{"method", "conf-fw"}, {"half_width", ext_to_json(c.half_width)}, {"alpha", c.alpha},
          {"n2", c.n2}, {"rank", c.rank}};
}

FixedWidthCalibration fixed_width_from_json(const json& j) {
  FixedWidthCalibration c;
  c.half_width = ext_from_json(field<json>(j, "half_width"));
  c.alpha = field<double>(j, "alpha");
  c.n2 = field<std::size_t>(j, "n2");
  c.rank = field<std::size_t>(j, "rank");
  return c;
}

json to_json(const PavSelection& s) {
  return {{"method", "pav"},
          {"tau_hat", s.tau_hat},
          {"grid", s.grid},
          {"coverage", s.coverage},
          {"alpha", s.alpha},
          {"n2", s.n2},
          {"nominal_alpha", s.nominal_alpha},
          {"epsilon", s.epsilon},
          {"required_n2", s.required_n2},
          {"guarantee_met", s.guarantee_met}};
}

PavSelection pav_from_json(const json& j) {
  PavSelection s;
  s.tau_hat = field<double>(j, "tau_hat");
  s.grid = field<std::vector<double>>(j, "grid");
  s.coverage = field<std::vector<double>>(j, "coverage");
  s.alpha = field<double>(j, "alpha");
  s.n2 = field<std::size_t>(j, "n2");
  s.nominal_alpha = field<double>(j, "nominal_alpha");
  s.epsilon = field<double>(j, "epsilon");
  s.required_n2 = field<std::size_t>(j, "required_n2");
  s.guarantee_met = field<bool>(j, "guarantee_met");
  if (s.grid.size() != s.coverage.size()) throw FormatError("pav: grid and coverage differ in length");
  return s;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace pinet
