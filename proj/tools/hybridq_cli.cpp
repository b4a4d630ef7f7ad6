// Command-line harness: generate, run, sweep, ablate-conformal, verify, report.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "hybridq/harness/report.hpp"

namespace {

namespace fs = std::filesystem;
using namespace hybridq;

enum ExitCode { kOk = 0, kConfigError = 1, kPartialFailure = 2, kIoError = 3 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output = o.out;
  return cfg;
}

fs::path prepare_output(const ExperimentConfig& cfg) {
  io::ensure_writable_directory(cfg.output);
  return cfg.output;
}

void report_failures(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "hybridq: failed: " << e << "\n";
}

int cmd_generate(const Options& o) {
  const ExperimentConfig cfg = load(o);
  if (cfg.source != DataSource::Synthetic) throw ConfigError("generate needs [data] source = \"synthetic\"");
  const fs::path out = prepare_output(cfg);
  const auto g = generate_synthetic_dataset(default_true_params(cfg.scenario.rooms), cfg.scenario, cfg.seed);
  std::ostringstream csv;
  write_csv(csv, g.dataset);
  io::write_file_atomic(out / "dataset.csv", csv.str());
  Json meta{{"format", "hybridq-scenario"}, {"seed", cfg.seed}, {"rooms", g.dataset.rooms}, {"rows", g.dataset.rows()}};
  meta["physics_rmse"] = g.physics_rmse;
  auto params = [](const RcParams& ps) {
    Json a = Json::array();
    for (const auto& p : ps) {
      Json o = Json::object();
      const auto v = p.to_array();
      for (std::size_t i = 0; i < RoomRc::kCount; ++i) o[kRcParameterNames[i]] = v[i];
      a.push_back(o);
    }
    return a;
  };
  meta["true_params"] = params(g.truth);
  meta["physics_params"] = params(g.physics);
  io::write_file_atomic(out / "scenario.json", meta.dump(2) + "\n");
  std::cout << "wrote " << (out / "dataset.csv").string() << " (" << g.dataset.rows() << " rows)\n";
  return kOk;
}

int cmd_run(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const fs::path out = prepare_output(cfg);
  const ExperimentData data = load_experiment_data(cfg);
  const auto res = run_experiment(cfg, data);
  emit_report(out, cfg, data, res);
  std::vector<std::string> errors;
  for (const auto& r : res.results) {
    if (r.ok) std::cout << r.combo.label() << ": mean PBL " << r.metrics.mean_pbl() << "\n";
    else errors.push_back(r.error);
  }
  report_failures(errors);
  return errors.empty() ? kOk : kPartialFailure;
}

int cmd_sweep(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const fs::path out = prepare_output(cfg);
  const ExperimentData data = load_experiment_data(cfg);
  const auto res = run_sweep(cfg, data);
  write_report(out, sweep_json(cfg, data, res));
  std::vector<std::string> errors;
  for (const auto& e : res.entries) {
    if (e.ok) std::cout << to_string(e.kind) << " lambda=" << e.lambda << ": mean PBL " << e.mean << "\n";
    else errors.push_back(e.error);
  }
  report_failures(errors);
  return errors.empty() ? kOk : kPartialFailure;
}

int cmd_ablate(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const fs::path out = prepare_output(cfg);
  const ExperimentData data = load_experiment_data(cfg);
  const auto res = conformal_ablation(cfg, data);
  write_report(out, ablation_json(cfg, data, res));
  std::vector<std::string> errors;
  for (const auto& e : res.entries) {
    if (!e.ok) errors.push_back(e.error);
  }
  report_failures(errors);
  return errors.empty() ? kOk : kPartialFailure;
}

int cmd_verify(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const ExperimentData data = load_experiment_data(cfg);
  const auto v = verify_run(cfg.output, data);
  for (const auto& m : v.mismatches) std::cerr << "hybridq: mismatch: " << m << "\n";
  std::cout << "verified " << v.checked << " values, " << v.mismatches.size() << " mismatches\n";
  return v.mismatches.empty() ? kOk : kPartialFailure;
}

int cmd_report(const Options& o) {
  const fs::path out = o.out.empty() ? load(o).output : fs::path(o.out);
  const Json j = load_report(out);
  write_tables(out, j);
  std::cout << "rendered " << render_tables(j).size() << " tables into " << (out / "tables").string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid physics / data-driven quantile forecasting harness"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", opts.config, "experiment config file");
    if (need_config) c->required();
    sub->add_option("--out", opts.out, "output directory (overrides [experiment] output)");
    sub->add_option("--seed", seed, "random seed (overrides [experiment] seed)");
  };
  struct Verb {
    const char* name;
    const char* help;
    bool need_config;
    int (*fn)(const Options&);
  };
  const Verb verbs[] = {
      {"generate", "write a synthetic dataset in the ingestion format", true, cmd_generate},
      {"run", "train, calibrate and score every strategy x model combination", true, cmd_run},
      {"sweep", "regularization-constant sensitivity of the constrained strategy", true, cmd_sweep},
      {"ablate-conformal", "paired runs with and without conformal correction", true, cmd_ablate},
      {"verify", "recompute reported numbers from saved pipelines and the dataset", true, cmd_verify},
      {"report", "re-render tables from an existing report.json", false, cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Verb*>> subs;
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    add_common(sub, v.need_config);
    subs.emplace_back(sub, &v);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  for (const auto& [sub, verb] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opts.seed = seed;
    try {
      return verb->fn(opts);
    } catch (const IoError& e) {
      std::cerr << "hybridq: I/O error: " << e.what() << "\n";
      return kIoError;
    } catch (const InputError& e) {
      std::cerr << "hybridq: configuration error: " << e.what() << "\n";
      return kConfigError;
    } catch (const std::exception& e) {
      std::cerr << "hybridq: error: " << e.what() << "\n";
      return kPartialFailure;
    }
  }
  return kConfigError;
}
