#include "pinet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "pinet/error.hpp"
#include "pinet/hygiene.hpp"
#include "pinet/rng.hpp"

namespace pinet {

namespace {

// Stream tags under a replicate seed.
constexpr std::uint64_t kPoolStream = 1;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kSplitStream = 3;
constexpr std::uint64_t kMethodStream = 100;
constexpr std::uint64_t kGridStream = 200;

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs tasks on up to `threads` workers; rethrows the first failure (by task index).
void run_parallel(std::vector<std::function<void()>>& tasks, unsigned threads) {
  const std::size_t n = tasks.size();
  std::vector<std::exception_ptr> errors(n);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::mutex mu;
    std::size_t next = 0;
    auto work = [&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n) return;
          i = next++;
        }
        try {
          tasks[i]();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Re-raises library errors with a context prefix, keeping their type.
template <class F>
auto with_context(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const TrainingError& e) {
    throw TrainingError(context, e);
  } catch (const ParseError& e) {
    throw ParseError(context, e);
  } catch (const ShapeError& e) {
    throw ShapeError(context + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(context + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(context + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(context + ": " + e.what());
  } catch (const Error& e) {
    throw Error(context + ": " + e.what());
  }
}

std::string stage_context(const char* stage, const ExperimentConfig& cfg) {
  return std::string("stage ") + stage + " [config " + config_hash(cfg) + "]";
}

Dataset network_view_of(const Dataset& data, const std::optional<Standardization>& stats) {
  return stats ? apply_standardization(data, *stats) : data;
}

TrainConfig seeded(const TrainConfig& base, std::uint64_t seed) {
  TrainConfig c = base;
  c.seed = seed;
  return c;
}

PiNetwork untrained(const Architecture& arch, double tau, const TrainConfig& cfg) {
  PiNetwork net = PiNetwork::initialized(arch, derive_seed(cfg.seed, 0));
  net.training().tau = tau;
  net.training().seed = cfg.seed;
  return net;
}

std::vector<double> nonzero_descending(const std::vector<double>& grid) {
  std::vector<double> taus;
  for (double t : grid)
    if (t > 0.0) taus.push_back(t);
  std::sort(taus.begin(), taus.end(), std::greater<>());
  return taus;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate) {
  return derive_seed(master, replicate);
}

SyntheticSpec synthetic_spec(const ExperimentConfig& cfg, std::uint64_t rep_seed) {
  return {cfg.data.dim, cfg.data.signal, derive_seed(rep_seed, kPoolStream)};
}

Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t rep_seed) {
  cfg.validate();
  if (cfg.data.kind == DataSource::Kind::csv) {
    const Dataset loaded = load_csv(cfg.data.path, cfg.data.target, cfg.data.features);
    return split(loaded, cfg.data.fractions, derive_seed(rep_seed, kSplitStream));
  }

  const SyntheticSpec spec = synthetic_spec(cfg, rep_seed);
  Dataset pool = gen_synthetic(spec, cfg.data.n);
  SyntheticSpec test_spec = spec;
  test_spec.seed = derive_seed(rep_seed, kTestStream);
  Dataset test = gen_synthetic(test_spec, cfg.data.n_test);

  const std::size_t n = pool.size();
  const auto n1 = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.data.train_fraction));
  if (n1 == 0 || n1 == n) throw ConfigError("data: train_fraction leaves D1 or D2 empty");
  Rng rng(derive_seed(rep_seed, kSplitStream));
  const auto perm = random_permutation(n, rng);
  std::vector<Role> roles(n, Role::calibration);
  for (std::size_t k = 0; k < n1; ++k) roles[perm[k]] = Role::train;
  pool.assign_roles(std::move(roles));
  test.assign_roles(std::vector<Role>(test.size(), Role::test));
  return Dataset::concat(pool, test);
}

// ---------------------------------------------------------------------------
// MethodModel

bool MethodModel::needs_calibration() const {
  return method == Method::conf_nn || method == Method::conf_fw || method == Method::pav;
}

bool MethodModel::calibrated() const {
  switch (method) {
    case Method::conf_nn: return conformal.has_value();
    case Method::conf_fw: return fixed_width.has_value();
    case Method::pav: return pav.has_value();
    default: return true;
  }
}

MethodModel::Prediction MethodModel::predict(std::span<const double> raw_x, std::span<const double> net_x) const {
  if (!calibrated()) throw ConfigError("model '" + method_name(method) + "' has not been calibrated");
  switch (method) {
    case Method::conf_nn: {
      const PiTriple t = networks.at(0).second.forward(net_x);
      const PiInterval iv = expand_interval(t, conformal->c_hat);
      return {{iv.lower, t.median, iv.upper}, iv};
    }
    case Method::conf_fw: {
      const double m = networks.at(0).second.forward(net_x).median;
      const PiInterval iv = fixed_width_interval(m, fixed_width->half_width);
      return {{iv.lower, m, iv.upper}, iv};
    }
    case Method::pav: {
      if (pav->tau_hat > 0.0) {
        for (const auto& [tau, net] : networks) {
          if (tau == pav->tau_hat) {
            const PiTriple t = net.forward(net_x);
            return {t, to_interval(t)};
          }
        }
        throw ConfigError("pav: no network for selected tau");
      }
      // tau_hat = 0: whole line; point prediction from the widest-level fit.
      const double m = networks.empty() ? 0.0 : networks.front().second.forward(net_x).median;
      return {{-kInf, m, kInf}, {-kInf, kInf}};
    }
    case Method::neg_ll: {
      const PiTriple t = gaussian->interval(net_x, alpha);
      return {t, to_interval(t)};
    }
    case Method::oracle: {
      const PiTriple t = oracle_quantiles(raw_x, *oracle, alpha).triple();
      return {t, to_interval(t)};
    }
  }
  throw ConfigError("unknown method");
}

json to_json(const MethodModel& m) {
  json doc = {{"format_version", kFormatVersion}, {"kind", "method_model"}, {"method", method_name(m.method)},
              {"alpha", m.alpha}};
  doc["standardization"] = m.standardization ? to_json(*m.standardization) : json(nullptr);
  json nets = json::array();
  for (const auto& [tau, net] : m.networks) nets.push_back({{"tau", tau}, {"network", to_json(net)}});
  doc["networks"] = nets;
  doc["gaussian"] = m.gaussian ? to_json(*m.gaussian) : json(nullptr);
  doc["oracle"] = m.oracle ? to_json(*m.oracle) : json(nullptr);
  if (m.conformal) {
    doc["calibration"] = to_json(*m.conformal);
  } else if (m.fixed_width) {
    doc["calibration"] = to_json(*m.fixed_width);
  } else if (m.pav) {
    doc["calibration"] = to_json(*m.pav);
  } else {
    doc["calibration"] = nullptr;
  }
  return doc;
}

MethodModel method_model_from_json(const json& doc) {
  check_version(doc, "method_model");
  MethodModel m;
  try {
    m.method = parse_method(doc.at("method").get<std::string>());
    m.alpha = doc.at("alpha").get<double>();
    if (!doc.at("standardization").is_null())
      m.standardization = standardization_from_json(doc.at("standardization"));
    for (const auto& n : doc.at("networks"))
      m.networks.emplace_back(n.at("tau").get<double>(), pi_network_from_json(n.at("network")));
    if (!doc.at("gaussian").is_null()) m.gaussian = gaussian_network_from_json(doc.at("gaussian"));
    if (!doc.at("oracle").is_null()) m.oracle = synthetic_spec_from_json(doc.at("oracle"));
    const json& cal = doc.at("calibration");
    if (!cal.is_null()) {
      switch (m.method) {
        case Method::conf_nn: m.conformal = conformal_from_json(cal); break;
        case Method::conf_fw: m.fixed_width = fixed_width_from_json(cal); break;
        case Method::pav: m.pav = pav_from_json(cal); break;
        default: break;
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("method model: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("method model: ") + e.what());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Stages

std::vector<MethodModel> train_models(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t rep_seed) {
  return with_context(stage_context("train", cfg), [&] {
    cfg.validate();
    std::optional<Standardization> stats;
    Dataset net_data = data;
    if (cfg.data.standardize) {
      net_data = standardize(data);
      stats = net_data.standardization();
    }
    const DataView d1 = net_data.view(Role::train);
    if (d1.empty()) throw DomainError("D1 is empty");
    const Architecture arch{data.dim(), cfg.hidden};

    std::vector<MethodModel> models(cfg.methods.size());
    std::vector<std::function<void()>> tasks;

    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
      MethodModel& model = models[k];
      model.method = cfg.methods[k];
      model.alpha = cfg.alpha;
      model.standardization = stats;
      const TrainConfig tc =
          seeded(cfg.train, derive_seed(rep_seed, kMethodStream + static_cast<std::uint64_t>(model.method)));

      switch (model.method) {
        case Method::conf_nn:
        case Method::conf_fw: {
          const double tau = cfg.conformal_tau();
          model.networks.emplace_back(tau, PiNetwork{});
          tasks.emplace_back([&, tau, tc] {
            model.networks[0].second = cfg.calibration_only ? untrained(arch, tau, tc) : fit(d1, tau, tc, arch);
          });
          break;
        }
        case Method::pav: {
          const auto taus = nonzero_descending(cfg.grid);
          const std::uint64_t grid_seed = derive_seed(rep_seed, kGridStream);
          for (double tau : taus) model.networks.emplace_back(tau, PiNetwork{});
          auto fit_one = [&, grid_seed](std::size_t i, const PiNetwork* start) {
            const double tau = model.networks[i].first;
            const TrainConfig gc = seeded(cfg.train, derive_seed(grid_seed, i));
            if (cfg.calibration_only) {
              model.networks[i].second = untrained(arch, tau, gc);
            } else if (start) {
              model.networks[i].second = fit(d1, tau, gc, *start);
            } else {
              model.networks[i].second = fit(d1, tau, gc, arch);
            }
          };
          if (cfg.warm_start) {
            tasks.emplace_back([&, fit_one] {
              for (std::size_t i = 0; i < model.networks.size(); ++i)
                fit_one(i, i == 0 ? nullptr : &model.networks[i - 1].second);
            });
          } else {
            for (std::size_t i = 0; i < model.networks.size(); ++i)
              tasks.emplace_back([fit_one, i] { fit_one(i, nullptr); });
          }
          break;
        }
        case Method::neg_ll:
          tasks.emplace_back([&, tc] {
            model.gaussian = cfg.calibration_only
                                 ? GaussianNetwork::initialized(arch, derive_seed(tc.seed, 0))
                                 : fit_gaussian(d1, tc, arch);
          });
          break;
        case Method::oracle:
          model.oracle = synthetic_spec(cfg, rep_seed);
          break;
      }
    }
    run_parallel(tasks, cfg.threads);
    return models;
  });
}

void calibrate_models(const ExperimentConfig& cfg, const Dataset& data, std::vector<MethodModel>& models) {
  with_context(stage_context("calibrate", cfg), [&] {
    for (MethodModel& model : models) {
      if (!model.needs_calibration()) continue;
      const Dataset net_data = network_view_of(data, model.standardization);
      const DataView d2 = net_data.view(Role::calibration);
      if (d2.empty()) throw DomainError("D2 is empty");
      for (const auto& [tau, net] : model.networks)
        if (net.input_dim() != data.dim()) throw ShapeError("model and dataset dimensions differ");

      switch (model.method) {
        case Method::conf_nn:
          model.conformal = split_conformal(model.networks.at(0).second, d2, model.alpha);
          break;
        case Method::conf_fw:
          model.fixed_width = fixed_width_conformal(model.networks.at(0).second, d2, model.alpha);
          break;
        case Method::pav: {
          std::map<double, PiNetwork> nets;
          for (const auto& [tau, net] : model.networks) nets.emplace(tau, net);
          model.pav = cfg.pav_epsilon ? conservative_pav(nets, cfg.grid, d2, model.alpha, *cfg.pav_epsilon)
                                      : pav_select(nets, cfg.grid, d2, model.alpha);
          break;
        }
        default: break;
      }
    }
  });
}

const MethodResult* RunReport::find(Method m) const {
  for (const auto& r : methods)
    if (r.method == m) return &r;
  return nullptr;
}

RunReport evaluate_models(const ExperimentConfig& cfg, const Dataset& data, const std::vector<MethodModel>& models,
                          std::uint64_t rep_seed, std::size_t replicate) {
  return with_context(stage_context("evaluate", cfg), [&] {
    RunReport report;
    report.config = cfg;
    report.master_seed = cfg.seed;
    report.replicate = replicate;
    report.replicate_seed = rep_seed;

    const DataView d3 = data.view(Role::test);
    if (d3.empty()) throw DomainError("D3 is empty");
    const bool synthetic = cfg.data.kind == DataSource::Kind::synthetic;
    const SyntheticSpec spec = synthetic_spec(cfg, rep_seed);

    auto& detail = report.detail;
    for (std::size_t i = 0; i < d3.size(); ++i) {
      detail.y.push_back(d3.y(i));
      if (synthetic) detail.index.push_back(spec.index(d3.x(i)));
    }

    for (const MethodModel& model : models) {
      for (const auto& [tau, net] : model.networks)
        if (net.input_dim() != data.dim()) throw ShapeError("model and dataset dimensions differ");
      if (model.gaussian && model.gaussian->input_dim() != data.dim())
        throw ShapeError("model and dataset dimensions differ");
      if (model.standardization && model.standardization->mean.size() != data.dim())
        throw ShapeError("model standardization and dataset dimensions differ");

      const Dataset net_data = network_view_of(data, model.standardization);
      std::vector<PiInterval> intervals;
      std::vector<PiTriple> triples;
      std::vector<double> points;
      std::vector<OracleTriple> oracle;
      for (std::size_t i = 0; i < d3.size(); ++i) {
        const std::size_t row = d3.row_index(i);
        hygiene::record(hygiene::Stage::evaluate, row);
        const auto p = model.predict(data.x(row), net_data.x(row));
        intervals.push_back(p.interval);
        triples.push_back(p.triple);
        points.push_back(p.triple.median);
        if (synthetic) oracle.push_back(oracle_quantiles(data.x(row), spec, cfg.alpha));
      }

      MethodResult res;
      res.method = model.method;
      res.n_test = d3.size();
      res.metrics = interval_metrics(intervals, points, detail.y);
      if (synthetic) res.oracle_quantile_mad = quantile_mad_vs_oracle(triples, oracle);
      if (model.conformal) res.calibration = to_json(*model.conformal);
      if (model.fixed_width) res.calibration = to_json(*model.fixed_width);
      if (model.pav) res.calibration = to_json(*model.pav);
      if (synthetic) {
        try {
          res.conditional = conditional_coverage(intervals, detail.y, detail.index, cfg.curves.conditional_bins);
        } catch (const DomainError& e) {
          report.notes.push_back(method_name(model.method) + ": conditional coverage skipped: " + e.what());
        }
      }
      report.methods.push_back(std::move(res));
      detail.intervals.emplace(model.method, std::move(intervals));
    }

    const auto ref = detail.intervals.find(Method::conf_nn);
    if (ref != detail.intervals.end()) {
      std::vector<double> lengths;
      for (const auto& iv : ref->second) lengths.push_back(iv.length());
      std::map<std::string, std::vector<bool>> covered;
      for (const auto& [method, ivs] : detail.intervals) {
        std::vector<bool> flags(ivs.size());
        for (std::size_t i = 0; i < ivs.size(); ++i) flags[i] = ivs[i].contains(detail.y[i]);
        covered.emplace(method_name(method), std::move(flags));
      }
      try {
        auto curves = coverage_by_length(lengths, covered, cfg.curves.length);
        for (auto& res : report.methods) res.by_length = std::move(curves.at(method_name(res.method)));
      } catch (const DomainError& e) {
        report.notes.push_back(std::string("coverage by length skipped: ") + e.what());
      }
    }
    return report;
  });
}

RunReport run_experiment(const ExperimentConfig& cfg, std::size_t replicate) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t rep = replicate_seed(cfg.seed, replicate);
  const Dataset data = with_context(stage_context("data", cfg), [&] { return build_dataset(cfg, rep); });
  auto models = train_models(cfg, data, rep);
  calibrate_models(cfg, data, models);
  RunReport report = evaluate_models(cfg, data, models, rep, replicate);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ReplicationSummary run_replications(const ExperimentConfig& cfg, std::size_t replications) {
  if (replications < 1) throw DomainError("run_replications: at least one replication required");
  cfg.validate();
  ReplicationSummary summary;
  summary.runs.resize(replications);
  ExperimentConfig inner = cfg;
  inner.threads = replications > 1 ? 1 : cfg.threads;
  std::vector<std::function<void()>> tasks;
  for (std::size_t r = 0; r < replications; ++r) {
    tasks.emplace_back([&, r] {
      summary.runs[r] = with_context("replicate " + std::to_string(r), [&] { return run_experiment(inner, r); });
    });
  }
  run_parallel(tasks, replications > 1 ? cfg.threads : 1);

  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  for (const auto& run : summary.runs) {
    for (const auto& m : run.methods) {
      auto& v = values[method_name(m.method)];
      v["ave_coverage"].push_back(m.metrics.ave_coverage);
      v["ave_length"].push_back(m.metrics.ave_length);
      v["iqr_length"].push_back(m.metrics.iqr_length);
      v["mad"].push_back(m.metrics.mad);
      if (!std::isnan(m.oracle_quantile_mad)) v["oracle_quantile_mad"].push_back(m.oracle_quantile_mad);
    }
  }
  for (const auto& [method, metrics] : values) {
    for (const auto& [name, xs] : metrics) {
      MetricSummary s;
      double sum = 0.0;
      for (double x : xs) sum += x;
      s.mean = sum / static_cast<double>(xs.size());
      double ss = 0.0;
      if (std::isfinite(s.mean)) {
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
      } else {
        s.sd = std::numeric_limits<double>::quiet_NaN();
      }
      s.min = *std::min_element(xs.begin(), xs.end());
      s.max = *std::max_element(xs.begin(), xs.end());
      summary.metrics[method][name] = s;
    }
  }
  return summary;
}

}  // namespace pinet
