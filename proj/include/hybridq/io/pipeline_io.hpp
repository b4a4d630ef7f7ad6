#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "hybridq/conformal/cqr.hpp"
#include "hybridq/hybrid/pipeline.hpp"
#include "hybridq/io/atomic_file.hpp"
#include "hybridq/io/model_io.hpp"

namespace hybridq::io {

/// A trained pipeline together with its conformal corrections, if any.
struct PipelineBundle {
  HybridPipeline pipeline;
  std::optional<ConformalCalibrator> calibrator;
};

inline constexpr std::string_view kPipelineKind = "pipeline";

inline void write_schema(BinaryWriter& w, const FeatureSchema& s) {
  w.put<std::uint64_t>(s.size());
  for (const auto& f : s.features()) {
    w.put_string(f.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(f.group));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(f.kind));
  }
}

inline FeatureSchema read_schema(BinaryReader& r) {
  const auto n = r.get<std::uint64_t>();
  if (n > r.remaining()) throw InputError("corrupt feature count");
  std::vector<Feature> fs;
  for (std::uint64_t i = 0; i < n; ++i) {
    Feature f;
    f.name = r.get_string();
    const auto g = r.get<std::uint8_t>(), k = r.get<std::uint8_t>();
    if (g > static_cast<std::uint8_t>(FeatureGroup::Room) || k > static_cast<std::uint8_t>(ChannelKind::Categorical)) {
      throw InputError("corrupt feature descriptor");
    }
    f.group = static_cast<FeatureGroup>(g);
    f.kind = static_cast<ChannelKind>(k);
    fs.push_back(std::move(f));
  }
  return FeatureSchema(std::move(fs));
}

inline void write_calibrator(BinaryWriter& w, const ConformalCalibrator& c) {
  w.put_strings(c.rooms);
  w.put_grid(c.grid);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.mode));
  w.put_bool(c.full_grid);
  w.put_vector(c.alphas);
  w.put<std::uint64_t>(c.entries.size());
  for (const auto& e : c.entries) {
    w.put<std::int64_t>(e.room);
    w.put(e.alpha);
    w.put<std::uint64_t>(e.lower);
    w.put<std::uint64_t>(e.upper);
    w.put(e.delta_q);
    w.put<std::uint64_t>(e.count);
  }
}

inline ConformalCalibrator read_calibrator(BinaryReader& r) {
  ConformalCalibrator c;
  c.rooms = r.get_strings();
  c.grid = r.get_grid();
  const auto mode = r.get<std::uint8_t>();
  if (mode > static_cast<std::uint8_t>(ConformalMode::Pooled)) throw InputError("unknown conformal mode");
  c.mode = static_cast<ConformalMode>(mode);
  c.full_grid = r.get_bool();
  c.alphas = r.get_vector<double>();
  const auto n = r.get<std::uint64_t>();
  if (n > r.remaining()) throw InputError("corrupt calibrator entry count");
  for (std::uint64_t i = 0; i < n; ++i) {
    ConformalEntry e;
    e.room = r.get<std::int64_t>();
    e.alpha = r.get<double>();
    e.lower = r.get<std::uint64_t>();
    e.upper = r.get<std::uint64_t>();
    e.delta_q = r.get<double>();
    e.count = r.get<std::uint64_t>();
    if (e.lower >= c.grid.size() || e.upper >= c.grid.size() || e.room < 0 ||
        e.room >= static_cast<Index>(c.rooms.size())) {
      throw InputError("corrupt calibrator entry");
    }
    c.entries.push_back(e);
  }
  return c;
}

inline std::string serialize(const PipelineBundle& b) {
  BinaryWriter w;
  write_header(w, kPipelineKind);
  const auto& p = b.pipeline;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(p.strategy.tag()));
  w.put_bool(p.strategy.lambda().has_value());
  w.put(p.strategy.lambda_or_zero());
  w.put_strings(p.rooms);
  write_schema(w, p.schema);
  w.put_bool(p.physics_input);
  w.put_bool(p.standardizer.has_value());
  if (p.standardizer) write_standardizer(w, *p.standardizer);
  write_model(w, p.model);
  w.put_bool(b.calibrator.has_value());
  if (b.calibrator) write_calibrator(w, *b.calibrator);
  return w.bytes();
}

inline PipelineBundle deserialize(std::string_view bytes) {
  BinaryReader r(bytes);
  read_header(r, kPipelineKind);
  PipelineBundle b;
  auto& p = b.pipeline;
  const auto tag = r.get<std::uint8_t>();
  if (tag > static_cast<std::uint8_t>(StrategyTag::Constrained)) throw InputError("unknown strategy tag");
  const bool has_lambda = r.get_bool();
  const double lambda = r.get<double>();
  if (has_lambda != (tag == static_cast<std::uint8_t>(StrategyTag::Constrained))) {
    throw InputError("regularization constant present for a strategy other than constrained");
  }
  p.strategy = has_lambda ? HybridStrategy::constrained(lambda) : HybridStrategy::make(static_cast<StrategyTag>(tag));
  p.rooms = r.get_strings();
  p.schema = read_schema(r);
  p.physics_input = r.get_bool();
  if (r.get_bool()) p.standardizer = read_standardizer(r);
  p.model = read_model(r);
  if (r.get_bool()) b.calibrator = read_calibrator(r);
  if (!r.done()) throw InputError("trailing bytes after pipeline container");
  if (model_inputs(p.model) != p.input_dimension()) throw InputError("model input width differs from the pipeline wiring");
  if (model_rooms(p.model) != static_cast<Index>(p.rooms.size())) throw InputError("model rooms differ from the pipeline");
  if (p.standardizer && p.standardizer->size() != p.input_dimension()) throw InputError("standardizer width mismatch");
  return b;
}

inline void save_pipeline(const std::filesystem::path& path, const PipelineBundle& b) {
  write_file_atomic(path, serialize(b));
}

inline PipelineBundle load_pipeline(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace hybridq::io
