// pinet: prediction-interval network experiments.
//
//   pinet run       --config cfg.json --out dir [--replications R]
//   pinet simulate  --config cfg.json --out dir      -> dataset.csv, dataset.json, config.json
//   pinet train     --out dir                        -> model_<method>.json
//   pinet calibrate --out dir                        -> model_<method>.json (calibrated)
//   pinet evaluate  --out dir                        -> metrics.csv, curves/, report.json
//   pinet report    --out dir                        -> metrics.csv, curves/ from report.json

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "pinet/error.hpp"
#include "pinet/experiment.hpp"

namespace fs = std::filesystem;
using namespace pinet;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::string methods;
  std::size_t replicate = 0;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Options& o, bool with_config) {
  if (with_config) {
    cmd->add_option("--config", o.config, "Experiment config (JSON)");
    cmd->add_option("--seed", o.seed, "Master seed (overrides config)");
    cmd->add_option("--methods", o.methods, "Comma-separated methods (overrides config)");
  }
  cmd->add_option("--out", o.out, "Output / artifact directory");
  cmd->add_option("--threads", o.threads, "Worker threads (0: all cores)");
}

ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
  } else if (!o.out.empty() && fs::exists(fs::path(o.out) / "config.json")) {
    cfg = load_config((fs::path(o.out) / "config.json").string());
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.methods.empty()) cfg.methods = parse_method_list(o.methods);
  if (o.replications) cfg.replications = *o.replications;
  if (!o.out.empty()) cfg.output = o.out;
  cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

fs::path model_path(const fs::path& dir, Method m) { return dir / ("model_" + method_name(m) + ".json"); }

struct Snapshot {
  Dataset data;
  std::size_t replicate = 0;
  std::uint64_t replicate_seed = 0;
};

void write_snapshot(const ExperimentConfig& cfg, const Dataset& data, std::size_t replicate, std::uint64_t rep_seed,
                    const fs::path& dir) {
  fs::create_directories(dir);
  write_json_file(to_json(cfg), (dir / "config.json").string());
  write_csv(data, (dir / "dataset.csv").string());
  write_json_file({{"format_version", kFormatVersion},
                   {"kind", "dataset_snapshot"},
                   {"file", "dataset.csv"},
                   {"rows", data.size()},
                   {"dim", data.dim()},
                   {"replicate", replicate},
                   {"replicate_seed", rep_seed},
                   {"config_hash", config_hash(cfg)}},
                  (dir / "dataset.json").string());
}

Snapshot read_snapshot(const fs::path& dir) {
  const json manifest = read_json_file((dir / "dataset.json").string());
  check_version(manifest, "dataset_snapshot");
  Snapshot s;
  try {
    s.replicate = manifest.at("replicate").get<std::size_t>();
    s.replicate_seed = manifest.at("replicate_seed").get<std::uint64_t>();
    s.data = load_snapshot((dir / manifest.at("file").get<std::string>()).string());
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset manifest: ") + e.what());
  }
  if (s.data.size() != manifest.at("rows").get<std::size_t>() || s.data.dim() != manifest.at("dim").get<std::size_t>())
    throw FormatError("dataset.csv does not match its manifest");
  return s;
}

std::vector<MethodModel> read_models(const ExperimentConfig& cfg, const fs::path& dir) {
  std::vector<MethodModel> models;
  for (Method m : cfg.methods) {
    const fs::path p = model_path(dir, m);
    if (!fs::exists(p)) throw FormatError("missing artifact '" + p.string() + "'");
    models.push_back(method_model_from_json(read_json_file(p.string())));
  }
  return models;
}

void write_models(const std::vector<MethodModel>& models, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& m : models) write_json_file(to_json(m), model_path(dir, m.method).string());
}

fs::path out_dir(const Options& o, const ExperimentConfig& cfg) { return o.out.empty() ? cfg.output : o.out; }

int cmd_run(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = out_dir(o, cfg);
  if (cfg.replications == 1) {
    const RunReport r = run_experiment(cfg, 0);
    write_report(r, dir.string());
    std::cout << metrics_csv(r);
    return 0;
  }
  const ReplicationSummary s = run_replications(cfg, cfg.replications);
  for (const auto& r : s.runs) write_report(r, (dir / ("rep_" + std::to_string(r.replicate))).string());
  write_summary(s, dir.string());
  std::cout << "wrote " << s.runs.size() << " replications to " << dir.string() << "\n";
  return 0;
}

int cmd_simulate(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const std::uint64_t rep = replicate_seed(cfg.seed, o.replicate);
  const Dataset data = build_dataset(cfg, rep);
  write_snapshot(cfg, data, o.replicate, rep, out_dir(o, cfg));
  std::cout << "D1=" << data.count(Role::train) << " D2=" << data.count(Role::calibration)
            << " D3=" << data.count(Role::test) << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = out_dir(o, cfg);
  const Snapshot s = read_snapshot(dir);
  write_models(train_models(cfg, s.data, s.replicate_seed), dir);
  return 0;
}

int cmd_calibrate(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = out_dir(o, cfg);
  const Snapshot s = read_snapshot(dir);
  auto models = read_models(cfg, dir);
  calibrate_models(cfg, s.data, models);
  write_models(models, dir);
  return 0;
}

int cmd_evaluate(const Options& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path dir = out_dir(o, cfg);
  const Snapshot s = read_snapshot(dir);
  const auto models = read_models(cfg, dir);
  const RunReport r = evaluate_models(cfg, s.data, models, s.replicate_seed, s.replicate);
  write_report(r, dir.string());
  std::cout << metrics_csv(r);
  return 0;
}

int cmd_report(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  const RunReport r = report_from_json(read_json_file((dir / "report.json").string()));
  write_tables(r, dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-interval networks with finite-sample calibration"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Full pipeline, optionally replicated");
  add_common(run, o, true);
  run->add_option("--replications", o.replications, "Number of replications");

  auto* simulate = app.add_subcommand("simulate", "Generate or load data and assign D1/D2/D3");
  add_common(simulate, o, true);
  simulate->add_option("--replicate", o.replicate, "Replicate index for seed derivation");

  auto* train = app.add_subcommand("train", "Fit networks on D1");
  add_common(train, o, true);
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate fitted models on D2");
  add_common(calibrate, o, true);
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate calibrated models on D3");
  add_common(evaluate, o, true);
  auto* report = app.add_subcommand("report", "Regenerate CSV tables from report.json");
  add_common(report, o, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(o);
    if (*simulate) return cmd_simulate(o);
    if (*train) return cmd_train(o);
    if (*calibrate) return cmd_calibrate(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*report) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
