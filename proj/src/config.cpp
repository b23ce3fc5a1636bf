#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "pinet/error.hpp"
#include "pinet/experiment.hpp"

namespace pinet {

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::pav: return "pav";
    case Method::conf_nn: return "conf-nn";
    case Method::conf_fw: return "conf-fw";
    case Method::neg_ll: return "neg-ll";
    case Method::oracle: return "oracle";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::pav, Method::conf_nn, Method::conf_fw, Method::neg_ll, Method::oracle})
    if (method_name(m) == s) return m;
  throw ConfigError("unknown method '" + s + "'");
}

std::vector<Method> parse_method_list(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(parse_method(item));
  }
  return out;
}

bool ExperimentConfig::uses(Method m) const {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

void ExperimentConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (methods.empty()) throw ConfigError("at least one method required");
  if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size())
    throw ConfigError("methods must not repeat");
  if (uses(Method::oracle) && data.kind != DataSource::Kind::synthetic)
    throw ConfigError("the oracle method requires the synthetic data source");
  if (tau && !(*tau > 0.0 && *tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (uses(Method::pav)) {
    if (std::find(grid.begin(), grid.end(), 0.0) == grid.end()) throw ConfigError("grid must contain 0");
    if (std::set<double>(grid.begin(), grid.end()).size() != grid.size())
      throw ConfigError("grid values must be distinct");
    for (double t : grid)
      if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("grid values must lie in [0, 1]");
  }
  if (pav_epsilon && !(*pav_epsilon > 0.0 && alpha - *pav_epsilon > 0.0))
    throw ConfigError("pav_epsilon must satisfy 0 < epsilon < alpha");
  if (replications < 1) throw ConfigError("replications must be at least 1");
  for (auto h : hidden)
    if (h == 0) throw ConfigError("hidden layer sizes must be positive");
  if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(train.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (curves.conditional_bins < 2) throw ConfigError("curves.conditional_bins must be >= 2");
  if (curves.length.bins < 1) throw ConfigError("curves.length_bins must be >= 1");
  if (!(curves.length.trim >= 0.0 && curves.length.trim < 0.5)) throw ConfigError("curves.length_trim must lie in [0, 0.5)");
  if (curves.length.window < 1) throw ConfigError("curves.smoothing_window must be >= 1");

  if (data.kind == DataSource::Kind::synthetic) {
    if (data.dim == 0 || data.signal > data.dim) throw ConfigError("data: need 0 <= signal <= dim, dim >= 1");
    if (data.n < 2) throw ConfigError("data.n must be at least 2");
    if (data.n_test < 1) throw ConfigError("data.n_test must be at least 1");
    if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0))
      throw ConfigError("data.train_fraction must lie in (0, 1)");
  } else {
    if (data.path.empty()) throw ConfigError("data.path is required for the csv source");
    if (data.target.empty()) throw ConfigError("data.target is required for the csv source");
    double total = 0.0;
    for (double f : data.fractions) {
      if (!(f > 0.0)) throw ConfigError("data.fractions must be positive");
      total += f;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("data.fractions must sum to 1");
  }
}

json to_json(const ExperimentConfig& c) {
  json data;
  if (c.data.kind == DataSource::Kind::synthetic) {
    data = {{"source", "synthetic"}, {"dim", c.data.dim}, {"signal", c.data.signal}, {"n", c.data.n},
            {"n_test", c.data.n_test}, {"train_fraction", c.data.train_fraction}};
  } else {
    data = {{"source", "csv"}, {"path", c.data.path}, {"target", c.data.target},
            {"features", c.data.features}, {"fractions", c.data.fractions}};
  }
  data["standardize"] = c.data.standardize;

  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));

  return {{"format_version", kFormatVersion},
          {"data", data},
          {"network", {{"hidden", c.hidden}}},
          {"train",
           {{"epochs", c.train.epochs},
            {"batch_size", c.train.batch_size},
            {"learning_rate", c.train.learning_rate},
            {"optimizer", optimizer_name(c.train.optimizer)},
            {"beta1", c.train.beta1},
            {"beta2", c.train.beta2},
            {"epsilon", c.train.epsilon},
            {"warm_start", c.warm_start}}},
          {"methods", methods},
          {"alpha", c.alpha},
          {"tau", c.conformal_tau()},
          {"grid", c.grid},
          {"pav_epsilon", c.pav_epsilon ? json(*c.pav_epsilon) : json(nullptr)},
          {"replications", c.replications},
          {"output", c.output},
          {"seed", c.seed},
          {"calibration_only", c.calibration_only},
          {"curves",
           {{"conditional_bins", c.curves.conditional_bins},
            {"length_bins", c.curves.length.bins},
            {"length_trim", c.curves.length.trim},
            {"smoothing_window", c.curves.length.window}}}};
}

ExperimentConfig config_from_json(const json& doc) {
  reject_unknown(doc,
                 {"format_version", "data", "network", "train", "methods", "alpha", "tau", "grid", "pav_epsilon",
                  "replications", "output", "seed", "calibration_only", "curves"},
                 "config");
  if (doc.contains("format_version")) {
    const auto& v = doc.at("format_version");
    if (!v.is_number_integer() || v.get<int>() != kFormatVersion)
      throw FormatError("unsupported config format_version " + v.dump());
  }
  ExperimentConfig c;

  if (doc.contains("data")) {
    const json& d = doc.at("data");
    reject_unknown(d,
                   {"source", "dim", "signal", "n", "n_test", "train_fraction", "path", "target", "features",
                    "fractions", "standardize"},
                   "data");
    std::string source = "synthetic";
    read(d, "source", source, "data");
    if (source == "synthetic") {
      c.data.kind = DataSource::Kind::synthetic;
    } else if (source == "csv") {
      c.data.kind = DataSource::Kind::csv;
    } else {
      throw ConfigError("data.source must be 'synthetic' or 'csv'");
    }
    read(d, "dim", c.data.dim, "data");
    read(d, "signal", c.data.signal, "data");
    read(d, "n", c.data.n, "data");
    read(d, "n_test", c.data.n_test, "data");
    read(d, "train_fraction", c.data.train_fraction, "data");
    read(d, "path", c.data.path, "data");
    read(d, "target", c.data.target, "data");
    read(d, "features", c.data.features, "data");
    read(d, "fractions", c.data.fractions, "data");
    read(d, "standardize", c.data.standardize, "data");
  }
  if (doc.contains("network")) {
    reject_unknown(doc.at("network"), {"hidden"}, "network");
    read(doc.at("network"), "hidden", c.hidden, "network");
  }
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    reject_unknown(t, {"epochs", "batch_size", "learning_rate", "optimizer", "beta1", "beta2", "epsilon", "warm_start"},
                   "train");
    read(t, "epochs", c.train.epochs, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "learning_rate", c.train.learning_rate, "train");
    std::string opt = optimizer_name(c.train.optimizer);
    read(t, "optimizer", opt, "train");
    try {
      c.train.optimizer = parse_optimizer(opt);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    read(t, "beta1", c.train.beta1, "train");
    read(t, "beta2", c.train.beta2, "train");
    read(t, "epsilon", c.train.epsilon, "train");
    read(t, "warm_start", c.warm_start, "train");
  }
  if (doc.contains("methods")) {
    std::vector<std::string> names;
    read(doc, "methods", names, "config");
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(parse_method(n));
  }
  read(doc, "alpha", c.alpha, "config");
  if (doc.contains("tau") && !doc.at("tau").is_null()) {
    double t = 0.0;
    read(doc, "tau", t, "config");
    c.tau = t;
  }
  read(doc, "grid", c.grid, "config");
  if (doc.contains("pav_epsilon") && !doc.at("pav_epsilon").is_null()) {
    double e = 0.0;
    read(doc, "pav_epsilon", e, "config");
    c.pav_epsilon = e;
  }
  read(doc, "replications", c.replications, "config");
  read(doc, "output", c.output, "config");
  read(doc, "seed", c.seed, "config");
  read(doc, "calibration_only", c.calibration_only, "config");
  if (doc.contains("curves")) {
    const json& cv = doc.at("curves");
    reject_unknown(cv, {"conditional_bins", "length_bins", "length_trim", "smoothing_window"}, "curves");
    read(cv, "conditional_bins", c.curves.conditional_bins, "curves");
    read(cv, "length_bins", c.curves.length.bins, "curves");
    read(cv, "length_trim", c.curves.length.trim, "curves");
    read(cv, "smoothing_window", c.curves.length.window, "curves");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pinet
