#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "hybridq/harness/experiment.hpp"

namespace hybridq {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportFormat = "hybridq-report";
inline constexpr int kReportVersion = 1;

// "0.90" for alpha = 0.1.
inline std::string confidence_key(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 1.0 - alpha);
  return buf;
}

namespace detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_or_null(x));
  return a;
}

inline Json per_alpha(const std::vector<double>& alphas, const std::vector<std::vector<double>>& values) {
  Json o = Json::object();
  for (std::size_t i = 0; i < alphas.size(); ++i) o[confidence_key(alphas[i])] = numbers(values[i]);
  return o;
}

inline Json range_json(RowRange r) { return Json::array({r.begin, r.end}); }

inline Json split_json(const DatasetSplit& s) {
  return Json{{"train", range_json(s.train)}, {"calibration", range_json(s.calibration)}, {"test", range_json(s.test)}};
}

inline std::vector<double> to_numbers(const Json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  return v;
}

}  // namespace detail

inline Json metrics_json(const EvaluationReport& r) {
  Json pbl_by_level = Json::array(), reliability = Json::array();
  for (const auto& c : r.pbl_by_level) pbl_by_level.push_back(detail::numbers(c));
  for (const auto& c : r.reliability) reliability.push_back(detail::numbers(c));
  return Json{{"pbl", detail::numbers(r.pbl)},
              {"pbl_mean", detail::number_or_null(r.mean_pbl())},
              {"ace", detail::per_alpha(r.alphas, r.ace)},
              {"wks", detail::per_alpha(r.alphas, r.wks)},
              {"width", detail::per_alpha(r.alphas, r.width)},
              {"pbl_by_level", pbl_by_level},
              {"reliability", reliability}};
}

inline Json report_header(const std::string& command, const ExperimentConfig& cfg, const ExperimentData& data) {
  Json h{{"format", kReportFormat},
         {"version", kReportVersion},
         {"command", command},
         {"seed", cfg.seed},
         {"source", cfg.source == DataSource::Synthetic ? "synthetic" : "csv"},
         {"rooms", data.dataset.rooms},
         {"levels", cfg.levels},
         {"alphas", cfg.alphas},
         {"confidences", cfg.confidences}};
  if (!data.physics_rmse.empty()) h["physics_rmse"] = detail::numbers(data.physics_rmse);
  return h;
}

inline std::string pipeline_file(const Combination& c) { return "pipelines/" + c.label() + ".bin"; }

inline Json experiment_json(const ExperimentConfig& cfg, const ExperimentData& data, const ExperimentResult& res) {
  Json j = report_header("run", cfg, data);
  j["conformal"] = cfg.conformal;
  j["split"] = detail::split_json(res.split);
  Json results = Json::array();
  for (const auto& r : res.results) {
    Json e{{"label", r.combo.label()},
           {"strategy", std::string(to_string(r.combo.strategy.tag()))},
           {"model", std::string(to_string(r.combo.kind))}};
    if (r.combo.strategy.lambda()) e["lambda"] = *r.combo.strategy.lambda();
    e["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) {
      e["error"] = r.error;
      results.push_back(std::move(e));
      continue;
    }
    e["pipeline"] = pipeline_file(r.combo);
    e["monotone"] = r.monotone;
    e["metrics"] = metrics_json(r.metrics);
    if (r.raw) e["raw_metrics"] = metrics_json(*r.raw);
    if (r.calibrator) {
      std::vector<std::vector<double>> dq;
      for (double a : cfg.alphas) {
        std::vector<double> row;
        for (Index k = 0; k < static_cast<Index>(r.calibrator->rooms.size()); ++k) row.push_back(r.calibrator->at(k, a).delta_q);
        dq.push_back(std::move(row));
      }
      e["delta_q"] = detail::per_alpha(cfg.alphas, dq);
    }
    e["window_open_pbl"] = detail::numbers(r.window_open_pbl);
    if (!r.extended_window_pbl.empty()) e["extended_window_pbl"] = detail::numbers(r.extended_window_pbl);
    results.push_back(std::move(e));
  }
  j["results"] = std::move(results);
  return j;
}

inline Json ablation_json(const ExperimentConfig& cfg, const ExperimentData& data, const AblationResult& res) {
  Json j = report_header("ablate-conformal", cfg, data);
  j["split_without"] = detail::split_json(res.split_without);
  j["split_with"] = detail::split_json(res.split_with);
  Json entries = Json::array();
  for (const auto& a : res.entries) {
    Json e{{"label", a.combo.label()},
           {"strategy", std::string(to_string(a.combo.strategy.tag()))},
           {"model", std::string(to_string(a.combo.kind))},
           {"status", a.ok ? "ok" : "failed"}};
    if (!a.ok) {
      e["error"] = a.error;
    } else {
      e["ace_without"] = detail::per_alpha(cfg.alphas, a.ace_without);
      e["ace_with"] = detail::per_alpha(cfg.alphas, a.ace_with);
      e["width_without"] = detail::per_alpha(cfg.alphas, a.width_without);
      e["width_with"] = detail::per_alpha(cfg.alphas, a.width_with);
      e["delta_q"] = detail::per_alpha(cfg.alphas, a.delta_q);
      e["pbl_without"] = detail::numbers(a.pbl_without);
      e["pbl_with"] = detail::numbers(a.pbl_with);
    }
    entries.push_back(std::move(e));
  }
  j["ablation"] = std::move(entries);
  j["ecdf_distance"] = detail::numbers(res.ecdf_distance);
  return j;
}

inline Json sweep_json(const ExperimentConfig& cfg, const ExperimentData& data, const SweepResult& res) {
  Json j = report_header("sweep", cfg, data);
  j["split"] = detail::split_json(res.split);
  Json entries = Json::array();
  for (const auto& s : res.entries) {
    Json e{{"model", std::string(to_string(s.kind))}, {"lambda", s.lambda}, {"status", s.ok ? "ok" : "failed"}};
    if (!s.ok) {
      e["error"] = s.error;
    } else {
      e["pbl"] = detail::numbers(s.pbl);
      e["pbl_mean"] = detail::number_or_null(s.mean);
    }
    entries.push_back(std::move(e));
  }
  j["sweep"] = std::move(entries);
  return j;
}

inline std::string dump_report(const Json& j) { return j.dump(2) + "\n"; }

namespace detail {

inline void cell(std::string& out, double v) {
  out += ',';
  if (std::isfinite(v)) append_number(out, v);
}

// Table with one row per room plus a mean row and one column per series.
inline std::string room_table(const std::vector<std::string>& rooms, const std::vector<std::string>& labels,
                              const std::vector<std::vector<double>>& columns) {
  std::string s = "room";
  for (const auto& l : labels) s += "," + l;
  s += '\n';
  for (std::size_t k = 0; k < rooms.size(); ++k) {
    s += rooms[k];
    for (const auto& c : columns) cell(s, c[k]);
    s += '\n';
  }
  s += "mean";
  for (const auto& c : columns) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : c) {
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
    cell(s, n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN());
  }
  s += '\n';
  return s;
}

// Table indexed by an axis (levels or confidences) with one column per series.
inline std::string axis_table(const std::string& axis_name, const std::vector<double>& axis,
                              const std::vector<std::string>& labels, const std::vector<std::vector<double>>& columns) {
  std::string s = axis_name;
  for (const auto& l : labels) s += "," + l;
  s += '\n';
  for (std::size_t i = 0; i < axis.size(); ++i) {
    append_number(s, axis[i]);
    for (const auto& c : columns) cell(s, c[i]);
    s += '\n';
  }
  return s;
}

}  // namespace detail

/// Flat tables derived from a report document, keyed by file name under
/// `tables/`. Both `run` and `report` render through this function.
inline std::map<std::string, std::string> render_tables(const Json& j) {
  std::map<std::string, std::string> files;
  const auto rooms = j.at("rooms").get<std::vector<std::string>>();
  const auto alphas = j.at("alphas").get<std::vector<double>>();
  const auto levels = j.at("levels").get<std::vector<double>>();
  const auto confidences = j.at("confidences").get<std::vector<double>>();

  if (j.contains("results")) {
    std::vector<const Json*> ok;
    for (const auto& r : j["results"]) {
      if (r.at("status") == "ok") ok.push_back(&r);
    }
    if (!ok.empty()) {
      std::vector<std::string> labels;
      for (const auto* r : ok) labels.push_back(r->at("label").get<std::string>());
      auto column = [&](auto get) {
        std::vector<std::vector<double>> cols;
        for (const auto* r : ok) cols.push_back(get(*r));
        return cols;
      };
      files["pbl.csv"] = detail::room_table(
          rooms, labels, column([](const Json& r) { return detail::to_numbers(r["metrics"]["pbl"]); }));
      files["window_pbl.csv"] = detail::room_table(
          rooms, labels, column([](const Json& r) { return detail::to_numbers(r["window_open_pbl"]); }));
      if (ok.front()->contains("extended_window_pbl")) {
        files["extended_window_pbl.csv"] = detail::room_table(
            rooms, labels, column([](const Json& r) { return detail::to_numbers(r["extended_window_pbl"]); }));
      }
      for (double a : alphas) {
        const auto key = confidence_key(a);
        for (const char* m : {"ace", "wks", "width"}) {
          files[std::string(m) + "_" + key + ".csv"] = detail::room_table(
              rooms, labels, column([&](const Json& r) { return detail::to_numbers(r["metrics"][m][key]); }));
        }
        if (ok.front()->contains("raw_metrics")) {
          files["raw_ace_" + key + ".csv"] = detail::room_table(
              rooms, labels, column([&](const Json& r) { return detail::to_numbers(r["raw_metrics"]["ace"][key]); }));
        }
        if (ok.front()->contains("delta_q")) {
          files["delta_q_" + key + ".csv"] = detail::room_table(
              rooms, labels, column([&](const Json& r) { return detail::to_numbers(r["delta_q"][key]); }));
        }
      }
      for (std::size_t k = 0; k < rooms.size(); ++k) {
        files["pbl_by_level_" + rooms[k] + ".csv"] = detail::axis_table(
            "level", levels, labels, column([&](const Json& r) { return detail::to_numbers(r["metrics"]["pbl_by_level"][k]); }));
        files["reliability_" + rooms[k] + ".csv"] = detail::axis_table(
            "confidence", confidences, labels,
            column([&](const Json& r) { return detail::to_numbers(r["metrics"]["reliability"][k]); }));
      }
    }
  }

  if (j.contains("ablation")) {
    std::vector<const Json*> ok;
    for (const auto& r : j["ablation"]) {
      if (r.at("status") == "ok") ok.push_back(&r);
    }
    if (!ok.empty()) {
      for (double a : alphas) {
        const auto key = confidence_key(a);
        std::vector<std::string> labels;
        std::vector<std::vector<double>> cols;
        for (const auto* r : ok) {
          const auto label = r->at("label").get<std::string>();
          const auto without = detail::to_numbers((*r)["ace_without"][key]);
          const auto with = detail::to_numbers((*r)["ace_with"][key]);
          std::vector<double> delta;
          for (std::size_t k = 0; k < with.size(); ++k) delta.push_back(std::abs(with[k]) - std::abs(without[k]));
          labels.insert(labels.end(), {label + "_without", label + "_with", label + "_abs_delta"});
          cols.insert(cols.end(), {without, with, delta});
        }
        files["ablation_ace_" + key + ".csv"] = detail::room_table(rooms, labels, cols);
      }
      files["ecdf_distance.csv"] = detail::room_table(rooms, {"ks_distance"}, {detail::to_numbers(j["ecdf_distance"])});
    }
  }

  if (j.contains("sweep")) {
    std::string s = "model,lambda";
    for (const auto& r : rooms) s += "," + r;
    s += ",mean\n";
    bool any = false;
    for (const auto& e : j["sweep"]) {
      if (e.at("status") != "ok") continue;
      any = true;
      s += e["model"].get<std::string>();
      detail::cell(s, e["lambda"].get<double>());
      for (double v : detail::to_numbers(e["pbl"])) detail::cell(s, v);
      detail::cell(s, e["pbl_mean"].is_null() ? std::numeric_limits<double>::quiet_NaN() : e["pbl_mean"].get<double>());
      s += '\n';
    }
    if (any) files["sweep_pbl.csv"] = s;
  }
  return files;
}

inline void write_tables(const std::filesystem::path& out, const Json& j) {
  for (const auto& [name, body] : render_tables(j)) io::write_file_atomic(out / "tables" / name, body);
}

namespace detail {

inline std::string trace_csv(const CombinationResult& r, const TimeSeriesDataset& ds, Index k) {
  std::string s = "timestamp,measured";
  if (ds.physics) s += ",physics";
  for (double q : r.trace.grid().levels()) {
    s += ",q";
    append_number(s, q);
  }
  s += '\n';
  for (Index n = 0; n < r.trace.steps(); ++n) {
    const Index row = r.trace_rows.begin + n;
    s += format_iso8601(ds.timestamps[static_cast<std::size_t>(row)]);
    cell(s, ds.temps(row, k));
    if (ds.physics) cell(s, (*ds.physics)(row, k));
    for (double v : r.trace.levels_at(n, k)) cell(s, v);
    s += '\n';
  }
  return s;
}

}  // namespace detail

/// Writes the tables of a report document, then the document itself.
inline void write_report(const std::filesystem::path& out, const Json& j) {
  write_tables(out, j);
  io::write_file_atomic(out / "report.json", dump_report(j));
}

/// Writes report.json, tables, traces and pipelines of a run.
inline void emit_report(const std::filesystem::path& out, const ExperimentConfig& cfg, const ExperimentData& data,
                        const ExperimentResult& res) {
  for (const auto& r : res.results) {
    if (!r.ok) continue;
    io::write_file_atomic(out / pipeline_file(r.combo), r.pipeline_bytes);
    for (Index k = 0; k < data.dataset.rooms_count(); ++k) {
      io::write_file_atomic(out / "traces" / (r.combo.label() + "_" + data.dataset.rooms[static_cast<std::size_t>(k)] + ".csv"),
                            detail::trace_csv(r, data.dataset, k));
    }
  }
  write_report(out, experiment_json(cfg, data, res));
}

inline Json load_report(const std::filesystem::path& dir) {
  const std::string text = io::read_file(dir / "report.json");
  try {
    Json j = Json::parse(text);
    if (j.value("format", "") != kReportFormat) throw InputError("report.json has an unexpected format tag");
    if (j.value("version", 0) != kReportVersion) throw InputError("unsupported report version");
    return j;
  } catch (const Json::exception& e) {
    throw InputError(std::string("report.json is malformed: ") + e.what());
  }
}

struct VerifyOutcome {
  std::size_t checked = 0;
  std::vector<std::string> mismatches;
};

/// Recomputes every table number of a run report from the serialized
/// pipelines and the dataset, and re-renders the tables for comparison with
/// the files on disk.
inline VerifyOutcome verify_run(const std::filesystem::path& out, const ExperimentData& data, double tolerance = 1e-9) {
  VerifyOutcome v;
  const Json j = load_report(out);
  if (j.at("command") != "run") throw InputError("verify expects the report of a 'run'");
  if (j.at("rooms").get<std::vector<std::string>>() != data.dataset.rooms) {
    v.mismatches.push_back("room list differs from the dataset");
    return v;
  }
  const auto& sp = j.at("split");
  const RowRange cal{sp["calibration"][0].get<Index>(), sp["calibration"][1].get<Index>()};
  const RowRange test{sp["test"][0].get<Index>(), sp["test"][1].get<Index>()};
  DatasetSplit split;
  split.calibration = cal;
  split.test = test;
  const auto alphas = j.at("alphas").get<std::vector<double>>();
  const auto confidences = j.at("confidences").get<std::vector<double>>();
  const Matrix y = rows_of(data.dataset.temps, test);

  auto compare = [&](const std::string& what, const std::vector<double>& expected, const std::vector<double>& actual) {
    for (std::size_t i = 0; i < expected.size(); ++i) {
      ++v.checked;
      const bool both_nan = std::isnan(expected[i]) && std::isnan(actual[i]);
      if (!both_nan && !(std::abs(expected[i] - actual[i]) <= tolerance * std::max(1.0, std::abs(expected[i])))) {
        v.mismatches.push_back(what + "[" + std::to_string(i) + "]: report " + std::to_string(expected[i]) +
                               ", recomputed " + std::to_string(actual[i]));
      }
    }
  };

  for (const auto& r : j.at("results")) {
    if (r.at("status") != "ok") continue;
    const std::string label = r.at("label");
    io::PipelineBundle b;
    try {
      b = io::load_pipeline(out / r.at("pipeline").get<std::string>());
    } catch (const std::exception& e) {
      v.mismatches.push_back(label + ": " + e.what());
      continue;
    }
    QuantileForecast f = predict_hybrid(b.pipeline, data.dataset, test);
    if (b.calibrator) f = conformalize_all(std::move(f), *b.calibrator);
    const auto m = evaluate(f, y, alphas, confidences);
    const Json& rm = r.at("metrics");
    compare(label + " pbl", detail::to_numbers(rm["pbl"]), m.pbl);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const auto key = confidence_key(alphas[a]);
      compare(label + " ace_" + key, detail::to_numbers(rm["ace"][key]), m.ace[a]);
      compare(label + " wks_" + key, detail::to_numbers(rm["wks"][key]), m.wks[a]);
      compare(label + " width_" + key, detail::to_numbers(rm["width"][key]), m.width[a]);
    }
    for (std::size_t k = 0; k < m.rooms.size(); ++k) {
      compare(label + " pbl_by_level_" + m.rooms[k], detail::to_numbers(rm["pbl_by_level"][k]), m.pbl_by_level[k]);
      compare(label + " reliability_" + m.rooms[k], detail::to_numbers(rm["reliability"][k]), m.reliability[k]);
    }
    if (!f.is_monotone()) v.mismatches.push_back(label + ": recomputed forecast is not monotone");
  }
  for (const auto& [name, body] : render_tables(j)) {
    std::string disk;
    try {
      disk = io::read_file(out / "tables" / name);
    } catch (const IoError&) {
      v.mismatches.push_back("tables/" + name + " missing");
      continue;
    }
    ++v.checked;
    if (disk != body) v.mismatches.push_back("tables/" + name + " differs from report.json");
  }
  return v;
}

}  // namespace hybridq
