#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hybridq/conformal/cqr.hpp"
#include "hybridq/harness/toml.hpp"
#include "hybridq/hybrid/pipeline.hpp"
#include "hybridq/hybrid/sweep.hpp"
#include "hybridq/io/atomic_file.hpp"
#include "hybridq/metrics/scores.hpp"
#include "hybridq/physics/synthetic.hpp"

namespace hybridq {

enum class DataSource { Synthetic, Csv };

/// Everything that determines a run. Loaded from a sectioned text file;
/// unknown sections and keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  std::size_t workers = 1;

  DataSource source = DataSource::Synthetic;
  std::filesystem::path csv_path;
  Index train_days = 365;  // first block for ingested data
  std::optional<std::vector<std::string>> rooms;  // ingested data: subset and order
  ScenarioConfig scenario;

  std::vector<StrategyTag> strategies{StrategyTag::DataDrivenOnly, StrategyTag::Assistant, StrategyTag::Residual,
                                      StrategyTag::Surrogate,      StrategyTag::Augmentation, StrategyTag::Constrained};
  std::vector<ModelKind> models{ModelKind::Linear, ModelKind::Mlp, ModelKind::Forest};
  double lambda = kDefaultLambda;
  HybridOptions hybrid;
  TrainConfig train;
  std::vector<double> levels = QuantileGrid::percentiles();

  bool conformal = true;
  std::vector<double> alphas{0.1};
  ConformalMode conformal_mode = ConformalMode::PerRoom;
  bool conformal_full_grid = false;

  std::vector<double> confidences = default_confidences();
  Index trace_start_day = 0;  // within the test block
  Index trace_days = 7;

  std::vector<double> sweep_lambdas = kDefaultSweepLambdas;
  std::vector<ModelKind> sweep_models{ModelKind::Mlp};

  QuantileGrid grid() const { return QuantileGrid(levels); }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    try {
      train.validate();
      if (source == DataSource::Synthetic) scenario.validate();
      const QuantileGrid g = grid();
      for (double a : alphas) interval_levels(g, a);
      for (double c : confidences) {
        if (!(c > 0.0 && c < 1.0)) fail("confidences must lie in (0, 1)");
        interval_levels(g, 1.0 - c);
      }
      HybridStrategy::constrained(lambda);
      for (double l : sweep_lambdas) HybridStrategy::constrained(l);
    } catch (const ConfigError&) {
      throw;
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
    if (source == DataSource::Csv && csv_path.empty()) fail("[data] path is required for csv input");
    if (source == DataSource::Synthetic && (scenario.train_days <= 0 || scenario.train_days >= scenario.days)) {
      fail("[scenario] train_days must leave a non-empty test block");
    }
    if (source == DataSource::Csv && train_days <= 0) fail("[data] train_days must be positive");
    if (strategies.empty() || models.empty()) fail("[models] strategies and kinds must be non-empty");
    if (std::set<StrategyTag>(strategies.begin(), strategies.end()).size() != strategies.size()) {
      fail("[models] strategies contains duplicates");
    }
    if (std::set<ModelKind>(models.begin(), models.end()).size() != models.size()) {
      fail("[models] kinds contains duplicates");
    }
    if (conformal && alphas.empty()) fail("[conformal] alphas must be non-empty when conformal is enabled");
    if (sweep_lambdas.empty()) fail("[sweep] lambdas must be non-empty");
    if (sweep_models.empty()) fail("[sweep] models must be non-empty");
    if (workers == 0) fail("[experiment] workers must be positive");
    if (trace_days < 0 || trace_start_day < 0) fail("[evaluation] trace window must be non-negative");
  }
};

namespace detail {

template <typename E, typename F>
std::vector<E> parse_names(const std::vector<std::string>& names, F parse_one) {
  std::vector<E> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_one(n));
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
  const toml::Document doc = toml::parse(text);
  static const std::set<std::string> sections{"",       "experiment", "data",      "scenario", "models",
                                              "hybrid", "train",      "conformal", "evaluation", "sweep"};
  for (const auto& [name, table] : doc) {
    if (!sections.count(name)) {
      const int line = table.empty() ? 0 : table.begin()->second.line;
      throw ConfigError("unknown section [" + name + "]" + (line ? " near line " + std::to_string(line) : ""));
    }
  }
  auto section = [&](const std::string& name) {
    const auto it = doc.find(name);
    return toml::SectionReader(name, it == doc.end() ? nullptr : &it->second);
  };

  ExperimentConfig c;
  section("").finish();

  auto ex = section("experiment");
  std::string output = c.output.string();
  ex.read("seed", c.seed);
  ex.read("output", output);
  ex.read("workers", c.workers);
  ex.finish();
  c.output = output;

  auto data = section("data");
  std::string source = "synthetic", path;
  data.read("source", source);
  data.read("path", path);
  data.read("train_days", c.train_days);
  std::vector<std::string> rooms;
  if (data.has("rooms")) {
    data.read("rooms", rooms);
    c.rooms = rooms;
  }
  data.finish();
  if (source == "synthetic") c.source = DataSource::Synthetic;
  else if (source == "csv") c.source = DataSource::Csv;
  else throw ConfigError("[data] source must be \"synthetic\" or \"csv\", got \"" + source + "\"");
  c.csv_path = path;

  auto sc = section("scenario");
  auto& s = c.scenario;
  sc.read("rooms", s.rooms);
  sc.read("start", s.start);
  sc.read("days", s.days);
  sc.read("train_days", s.train_days);
  sc.read("t_mean", s.t_mean);
  sc.read("t_annual_amplitude", s.t_annual_amplitude);
  sc.read("t_diurnal_amplitude", s.t_diurnal_amplitude);
  sc.read("weather_ar", s.weather_ar);
  sc.read("weather_noise", s.weather_noise);
  sc.read("solar_peak", s.solar_peak);
  sc.read("window_rate", s.window_rate);
  sc.read("window_max_minutes", s.window_max_minutes);
  sc.read("extended_windows", s.extended_windows);
  sc.read("extended_min_hours", s.extended_min_hours);
  sc.read("extended_max_hours", s.extended_max_hours);
  sc.read("extended_window_days", s.extended_window_days);
  sc.read("noise_scale", s.noise_scale);
  sc.read("unmodeled_scale", s.unmodeled_scale);
  sc.read("bias", s.bias);
  sc.read("physics_offset", s.physics_offset);
  sc.read("calibration_days", s.calibration_days);
  sc.read("calibration_budget", s.calibration_budget);
  sc.read("iid", s.iid);
  sc.read("step_seconds", s.step_seconds);
  sc.read("initial_temperature", s.initial_temperature);
  sc.finish();
  try {
    parse_iso8601(s.start);
  } catch (const InputError& e) {
    throw ConfigError(std::string("[scenario] start: ") + e.what());
  }

  auto models = section("models");
  std::vector<std::string> strategies, kinds;
  const bool has_strategies = models.has("strategies"), has_kinds = models.has("kinds");
  models.read("strategies", strategies);
  models.read("kinds", kinds);
  models.finish();
  if (has_strategies) c.strategies = detail::parse_names<StrategyTag>(strategies, parse_strategy);
  if (has_kinds) c.models = detail::parse_names<ModelKind>(kinds, parse_model_kind);

  auto hy = section("hybrid");
  hy.read("lambda", c.lambda);
  hy.read("residual_physics_input", c.hybrid.residual_physics_input);
  hy.finish();

  auto tr = section("train");
  auto& t = c.train;
  tr.read("batch_size", t.batch_size);
  tr.read("max_epochs", t.max_epochs);
  tr.read("patience", t.patience);
  tr.read("validation_fraction", t.validation_fraction);
  tr.read("learning_rate", t.learning_rate);
  tr.read("hidden", t.hidden);
  std::string activation(to_string(t.activation));
  tr.read("activation", activation);
  tr.read("linear_learning_rate", t.linear_learning_rate);
  tr.read("linear_decay", t.linear_decay);
  tr.read("tolerance", t.tolerance);
  tr.read("trees", t.trees);
  tr.read("min_samples_split", t.min_samples_split);
  tr.read("min_samples_leaf", t.min_samples_leaf);
  tr.read("max_features", t.max_features);
  tr.read("bootstrap", t.bootstrap);
  tr.read("finetune_patience", t.finetune_patience);
  tr.read("finetune_epochs", t.finetune_epochs);
  tr.read("finetune_trees", t.finetune_trees);
  tr.read("levels", c.levels);
  tr.finish();
  try {
    t.activation = parse_activation(activation);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }

  auto cf = section("conformal");
  std::string mode = "per_room";
  cf.read("enabled", c.conformal);
  cf.read("alphas", c.alphas);
  cf.read("mode", mode);
  cf.read("full_grid", c.conformal_full_grid);
  cf.finish();
  if (mode == "per_room") c.conformal_mode = ConformalMode::PerRoom;
  else if (mode == "pooled") c.conformal_mode = ConformalMode::Pooled;
  else throw ConfigError("[conformal] mode must be \"per_room\" or \"pooled\"");

  auto ev = section("evaluation");
  ev.read("confidences", c.confidences);
  ev.read("trace_start_day", c.trace_start_day);
  ev.read("trace_days", c.trace_days);
  ev.finish();

  auto sw = section("sweep");
  std::vector<std::string> sweep_models;
  const bool has_sweep_models = sw.has("models");
  sw.read("lambdas", c.sweep_lambdas);
  sw.read("models", sweep_models);
  sw.finish();
  if (has_sweep_models) c.sweep_models = detail::parse_names<ModelKind>(sweep_models, parse_model_kind);

  try {
    (void)c.grid();
  } catch (const InputError& e) {
    throw ConfigError(std::string("[train] levels: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse_config(text);
}

inline constexpr const char* kWorkersEnv = "HYBRIDQ_WORKERS";

// Worker count after the environment override.
inline std::size_t effective_workers(const ExperimentConfig& c) {
  if (const char* env = std::getenv(kWorkersEnv); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v <= 0) throw ConfigError(std::string(kWorkersEnv) + " must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return c.workers;
}

}  // namespace hybridq
