#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pinet/calibrate.hpp"
#include "pinet/data.hpp"
#include "pinet/eval.hpp"
#include "pinet/net.hpp"
#include "pinet/serialize.hpp"

namespace pinet {

enum class Method { pav, conf_nn, conf_fw, neg_ll, oracle };

std::string method_name(Method m);  // "pav", "conf-nn", "conf-fw", "neg-ll", "oracle"
Method parse_method(const std::string& s);
std::vector<Method> parse_method_list(const std::string& comma_separated);

struct DataSource {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;

  // synthetic: n rows split into D1/D2 by train_fraction, plus an
  // independent test draw of n_test rows as D3.
  std::size_t dim = 10;
  std::size_t signal = 5;
  std::size_t n = 5000;
  std::size_t n_test = 5000;
  double train_fraction = 0.75;

  // csv
  std::string path;
  std::string target;
  std::vector<std::string> features;
  std::array<double, 3> fractions{0.6, 0.2, 0.2};

  bool standardize = false;
};

struct CurveOptions {
  std::size_t conditional_bins = 10;
  LengthBinning length;
};

struct ExperimentConfig {
  DataSource data;
  std::vector<std::size_t> hidden{64};
  TrainConfig train;  // seed is overwritten per network
  bool warm_start = false;
  std::vector<Method> methods{Method::pav, Method::conf_nn, Method::conf_fw};
  double alpha = 0.1;
  std::optional<double> tau;  // conf-nn / conf-fw level, defaults to alpha
  std::vector<double> grid = default_grid();
  std::optional<double> pav_epsilon;  // conservative PAV when set
  std::size_t replications = 1;
  std::string output = "out";
  std::uint64_t seed = 1;
  bool calibration_only = false;  // skip training, calibrate the seeded initial networks
  CurveOptions curves;
  unsigned threads = 0;  // 0: hardware concurrency; not part of the canonical echo

  double conformal_tau() const { return tau.value_or(alpha); }
  bool uses(Method m) const;
  /// Throws ConfigError on any schema violation.
  void validate() const;
};

json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const json& doc);
ExperimentConfig load_config(const std::string& path);
/// FNV-1a of the canonical JSON echo, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Seed of replicate r: derive_seed(master, r).
std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate);

/// Benchmark parameters for a replicate (seed is the D1/D2 pool stream).
SyntheticSpec synthetic_spec(const ExperimentConfig& cfg, std::uint64_t rep_seed);

/// Generated or loaded data with roles assigned. Features are left raw.
Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t rep_seed);

/// Everything one method needs to produce intervals.
struct MethodModel {
  Method method = Method::conf_nn;
  double alpha = 0.1;
  std::optional<Standardization> standardization;
  std::vector<std::pair<double, PiNetwork>> networks;  // (tau, net), tau descending for pav
  std::optional<GaussianNetwork> gaussian;
  std::optional<SyntheticSpec> oracle;

  std::optional<ConformalCalibration> conformal;
  std::optional<FixedWidthCalibration> fixed_width;
  std::optional<PavSelection> pav;

  bool needs_calibration() const;
  bool calibrated() const;

  struct Prediction {
    PiTriple triple;  // calibrated endpoints with the point prediction as median
    PiInterval interval;
  };
  /// `raw_x` is the untransformed covariate vector; `net_x` is the same row
  /// after this model's standardization.
  Prediction predict(std::span<const double> raw_x, std::span<const double> net_x) const;
};

json to_json(const MethodModel& m);
MethodModel method_model_from_json(const json& doc);

std::vector<MethodModel> train_models(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t rep_seed);
void calibrate_models(const ExperimentConfig& cfg, const Dataset& data, std::vector<MethodModel>& models);

struct MethodResult {
  Method method = Method::conf_nn;
  std::size_t n_test = 0;
  IntervalMetrics metrics;
  double oracle_quantile_mad = std::numeric_limits<double>::quiet_NaN();  // synthetic only
  json calibration;  // null when the method has none
  std::optional<BinnedCurve> conditional;
  std::optional<BinnedCurve> by_length;
};

struct RunReport {
  ExperimentConfig config;
  std::uint64_t master_seed = 0;
  std::size_t replicate = 0;
  std::uint64_t replicate_seed = 0;
  std::vector<MethodResult> methods;
  std::vector<std::string> notes;
  double wall_clock_seconds = 0.0;

  // Per-observation test-set detail; kept in memory only.
  struct TestDetail {
    std::vector<double> y;
    std::vector<double> index;  // b'x, synthetic only
    std::map<Method, std::vector<PiInterval>> intervals;
  } detail;

  const MethodResult* find(Method m) const;
};

RunReport evaluate_models(const ExperimentConfig& cfg, const Dataset& data, const std::vector<MethodModel>& models,
                          std::uint64_t rep_seed, std::size_t replicate = 0);

/// generate/load -> split -> standardize -> fit -> calibrate -> evaluate.
RunReport run_experiment(const ExperimentConfig& cfg, std::size_t replicate = 0);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ReplicationSummary {
  std::vector<RunReport> runs;
  // method -> metric name -> summary
  std::map<std::string, std::map<std::string, MetricSummary>> metrics;
};

ReplicationSummary run_replications(const ExperimentConfig& cfg, std::size_t replications);

json to_json(const RunReport& r);
RunReport report_from_json(const json& doc);

/// metrics.csv and curves/<method>.csv under `dir`.
void write_tables(const RunReport& r, const std::string& dir);
/// write_tables() plus report.json.
void write_report(const RunReport& r, const std::string& dir);
void write_summary(const ReplicationSummary& s, const std::string& dir);

std::string metrics_csv(const RunReport& r);
std::string curve_csv(const MethodResult& m);

}  // namespace pinet
