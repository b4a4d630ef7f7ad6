#pragma once

#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "hybridq/models/forecast.hpp"
#include "hybridq/models/forest.hpp"
#include "hybridq/models/linear.hpp"
#include "hybridq/models/mlp.hpp"

namespace hybridq {

enum class ModelKind { Linear, Mlp, Forest };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Forest: return "forest";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "mlp") return ModelKind::Mlp;
  if (s == "forest") return ModelKind::Forest;
  throw InputError("unknown model kind '" + std::string(s) + "' (expected linear, mlp or forest)");
}

// Forecasts from linear and network models use standardized inputs; the
// forest consumes raw features.
inline bool uses_standardized_inputs(ModelKind k) { return k != ModelKind::Forest; }

using QuantileModel = std::variant<LinearQuantileModel, QuantileMlp, QuantileForest>;

inline ModelKind kind_of(const QuantileModel& m) { return static_cast<ModelKind>(m.index()); }

inline Index model_inputs(const QuantileModel& m) {
  return std::visit([](const auto& v) { return v.inputs(); }, m);
}

inline const QuantileGrid& model_grid(const QuantileModel& m) {
  return std::visit(
      [](const auto& v) -> const QuantileGrid& {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LinearQuantileModel>) return v.grid;
        else return v.grid();
      },
      m);
}

inline Index model_rooms(const QuantileModel& m) {
  return std::visit(
      [](const auto& v) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LinearQuantileModel>) return v.rooms;
        else return v.rooms();
      },
      m);
}

/// Raw (unsorted) model output, N x (K * Q).
inline Matrix predict_raw(const QuantileModel& m, const Matrix& x) {
  const Index d = model_inputs(m);
  if (x.cols() != d) {
    throw InputError(std::string(to_string(kind_of(m))) + " model was trained on " + std::to_string(d) +
                     " features but received " + std::to_string(x.cols()));
  }
  return std::visit([&](const auto& v) { return v.predict(x); }, m);
}

inline QuantileForecast predict(const QuantileModel& m, const Matrix& x, std::vector<std::string> rooms) {
  if (static_cast<Index>(rooms.size()) != model_rooms(m)) throw InputError("room list differs from model output rooms");
  return QuantileForecast::from_matrix(predict_raw(m, x), std::move(rooms), model_grid(m));
}

}  // namespace hybridq
