#include <filesystem>
#include <fstream>
#include <sstream>

#include "pinet/error.hpp"
#include "pinet/experiment.hpp"
#include "pinet/numfmt.hpp"

namespace pinet {

namespace fs = std::filesystem;

namespace {

json ext_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(ext_to_json(x));
  return a;
}

std::vector<double> ext_vector(const json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(ext_from_json(x));
  return v;
}

json curve_to_json(const BinnedCurve& c) {
  return {{"centers", ext_array(c.centers)},
          {"coverage", ext_array(c.coverage)},
          {"raw_coverage", ext_array(c.raw_coverage)},
          {"mass", ext_array(c.mass)},
          {"counts", c.counts},
          {"reliable", c.reliable},
          {"window", c.window},
          {"retained", c.retained}};
}

BinnedCurve curve_from_json(const json& j) {
  BinnedCurve c;
  c.centers = ext_vector(j.at("centers"));
  c.coverage = ext_vector(j.at("coverage"));
  c.raw_coverage = ext_vector(j.at("raw_coverage"));
  c.mass = ext_vector(j.at("mass"));
  c.counts = j.at("counts").get<std::vector<std::size_t>>();
  c.reliable = j.at("reliable").get<std::vector<bool>>();
  c.window = j.at("window").get<int>();
  c.retained = j.at("retained").get<std::size_t>();
  const std::size_t n = c.centers.size();
  if (c.coverage.size() != n || c.raw_coverage.size() != n || c.mass.size() != n || c.counts.size() != n ||
      c.reliable.size() != n)
    throw FormatError("curve arrays differ in length");
  return c;
}

json metrics_to_json(const IntervalMetrics& m) {
  return {{"ave_coverage", ext_to_json(m.ave_coverage)},
          {"ave_length", ext_to_json(m.ave_length)},
          {"iqr_length", ext_to_json(m.iqr_length)},
          {"mad", ext_to_json(m.mad)},
          {"has_infinite", m.has_infinite}};
}

IntervalMetrics metrics_from_json(const json& j) {
  IntervalMetrics m;
  m.ave_coverage = ext_from_json(j.at("ave_coverage"));
  m.ave_length = ext_from_json(j.at("ave_length"));
  m.iqr_length = ext_from_json(j.at("iqr_length"));
  m.mad = ext_from_json(j.at("mad"));
  m.has_infinite = j.at("has_infinite").get<bool>();
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
}

void append_curve(std::ostringstream& os, const char* name, const BinnedCurve& c) {
  for (std::size_t b = 0; b < c.centers.size(); ++b) {
    os << kFormatVersion << ',' << name << ',' << b << ',' << format_double(c.centers[b]) << ','
       << format_double(c.coverage[b]) << ',' << format_double(c.raw_coverage[b]) << ','
       << format_double(c.mass[b]) << ',' << c.counts[b] << ',' << (c.reliable[b] ? 1 : 0) << '\n';
  }
}

}  // namespace

json to_json(const RunReport& r) {
  json methods = json::array();
  for (const auto& m : r.methods) {
    methods.push_back({{"method", method_name(m.method)},
                       {"n_test", m.n_test},
                       {"metrics", metrics_to_json(m.metrics)},
                       {"oracle_quantile_mad", ext_to_json(m.oracle_quantile_mad)},
                       {"calibration", m.calibration},
                       {"conditional", m.conditional ? curve_to_json(*m.conditional) : json(nullptr)},
                       {"by_length", m.by_length ? curve_to_json(*m.by_length) : json(nullptr)}});
  }
  return {{"format_version", kFormatVersion},
          {"kind", "run_report"},
          {"config", to_json(r.config)},
          {"config_hash", config_hash(r.config)},
          {"master_seed", r.master_seed},
          {"replicate", r.replicate},
          {"replicate_seed", r.replicate_seed},
          {"methods", methods},
          {"notes", r.notes},
          {"wall_clock_seconds", r.wall_clock_seconds}};
}

RunReport report_from_json(const json& doc) {
  check_version(doc, "run_report");
  RunReport r;
  try {
    r.config = config_from_json(doc.at("config"));
    r.master_seed = doc.at("master_seed").get<std::uint64_t>();
    r.replicate = doc.at("replicate").get<std::size_t>();
    r.replicate_seed = doc.at("replicate_seed").get<std::uint64_t>();
    r.notes = doc.at("notes").get<std::vector<std::string>>();
    r.wall_clock_seconds = doc.at("wall_clock_seconds").get<double>();
    for (const auto& j : doc.at("methods")) {
      MethodResult m;
      m.method = parse_method(j.at("method").get<std::string>());
      m.n_test = j.at("n_test").get<std::size_t>();
      m.metrics = metrics_from_json(j.at("metrics"));
      m.oracle_quantile_mad = ext_from_json(j.at("oracle_quantile_mad"));
      m.calibration = j.at("calibration");
      if (!j.at("conditional").is_null()) m.conditional = curve_from_json(j.at("conditional"));
      if (!j.at("by_length").is_null()) m.by_length = curve_from_json(j.at("by_length"));
      r.methods.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("run report: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("run report: ") + e.what());
  }
  return r;
}

std::string metrics_csv(const RunReport& r) {
  std::ostringstream os;
  os << "format_version,method,n_test,ave_coverage,ave_length,iqr_length,mad,oracle_quantile_mad,has_infinite\n";
  for (const auto& m : r.methods) {
    os << kFormatVersion << ',' << method_name(m.method) << ',' << m.n_test << ','
       << format_double(m.metrics.ave_coverage) << ',' << format_double(m.metrics.ave_length) << ','
       << format_double(m.metrics.iqr_length) << ',' << format_double(m.metrics.mad) << ','
       << format_double(m.oracle_quantile_mad) << ',' << (m.metrics.has_infinite ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string curve_csv(const MethodResult& m) {
  std::ostringstream os;
  os << "format_version,curve,bin,center,coverage,raw_coverage,mass,count,reliable\n";
  if (m.conditional) append_curve(os, "conditional", *m.conditional);
  if (m.by_length) append_curve(os, "by_length", *m.by_length);
  return os.str();
}

void write_tables(const RunReport& r, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "curves");
  write_text(root / "metrics.csv", metrics_csv(r));
  for (const auto& m : r.methods) write_text(root / "curves" / (method_name(m.method) + ".csv"), curve_csv(m));
}

void write_report(const RunReport& r, const std::string& dir) {
  write_tables(r, dir);
  write_json_file(to_json(r), (fs::path(dir) / "report.json").string());
}

void write_summary(const ReplicationSummary& s, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);
  std::ostringstream os;
  os << "format_version,method,metric,replications,mean,sd,min,max\n";
  json methods = json::object();
  for (const auto& [method, metrics] : s.metrics) {
    for (const auto& [name, v] : metrics) {
      os << kFormatVersion << ',' << method << ',' << name << ',' << s.runs.size() << ',' << format_double(v.mean)
         << ',' << format_double(v.sd) << ',' << format_double(v.min) << ',' << format_double(v.max) << '\n';
      methods[method][name] = {{"mean", ext_to_json(v.mean)},
                               {"sd", ext_to_json(v.sd)},
                               {"min", ext_to_json(v.min)},
                               {"max", ext_to_json(v.max)}};
    }
  }
  write_text(root / "aggregate.csv", os.str());

  json seeds = json::array();
  for (const auto& run : s.runs) seeds.push_back({{"replicate", run.replicate}, {"seed", run.replicate_seed}});
  json doc = {{"format_version", kFormatVersion},
              {"kind", "replication_summary"},
              {"config", s.runs.empty() ? json(nullptr) : to_json(s.runs.front().config)},
              {"replications", s.runs.size()},
              {"seeds", seeds},
              {"metrics", methods}};
  write_json_file(doc, (root / "aggregate.json").string());
}

}  // namespace pinet
