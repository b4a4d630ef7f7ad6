#pragma once

#include <memory>

#include "hybridq/core/standardizer.hpp"
#include "hybridq/io/binary.hpp"
#include "hybridq/models/model.hpp"

namespace hybridq::io {

inline void write_standardizer(BinaryWriter& w, const StandardizationParams& p) {
  w.put_matrix(p.mean);
  w.put_matrix(p.stddev);
}

inline StandardizationParams read_standardizer(BinaryReader& r) {
  StandardizationParams p;
  const Matrix mean = r.get_matrix<double>(), sd = r.get_matrix<double>();
  p.mean = Eigen::Map<const Vector>(mean.data(), mean.size());
  p.stddev = Eigen::Map<const Vector>(sd.data(), sd.size());
  if (p.mean.size() != p.stddev.size()) throw InputError("corrupt standardizer");
  return p;
}

inline void write_mlp(BinaryWriter& w, const QuantileMlp& m) {
  w.put<std::int64_t>(m.rooms());
  w.put_grid(m.grid());
  w.put<std::uint64_t>(m.layers().size());
  for (const auto& l : m.layers()) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(l.activation));
    w.put_matrix(l.weights);
    w.put_matrix(l.bias);
  }
}

inline QuantileMlp read_mlp(BinaryReader& r) {
  const auto rooms = r.get<std::int64_t>();
  QuantileGrid grid = r.get_grid();
  const auto count = r.get<std::uint64_t>();
  if (count > r.remaining()) throw InputError("corrupt layer count");
  std::vector<DenseLayer<float>> layers(count);
  for (auto& l : layers) {
    const auto a = r.get<std::uint8_t>();
    if (a > static_cast<std::uint8_t>(Activation::Identity)) throw InputError("unknown activation tag");
    l.activation = static_cast<Activation>(a);
    l.weights = r.get_matrix<float>();
    l.bias = r.get_matrix<float>();
  }
  return QuantileMlp(std::move(layers), rooms, std::move(grid));
}

inline void write_forest(BinaryWriter& w, const QuantileForest& f) {
  w.put<std::int64_t>(f.inputs());
  w.put<std::int64_t>(f.rooms());
  w.put_grid(f.grid());
  w.put<std::uint64_t>(f.stores().size());
  for (const auto& s : f.stores()) w.put_matrix(*s);
  w.put<std::uint64_t>(f.trees().size());
  for (const auto& t : f.trees()) {
    w.put<std::uint32_t>(t.store);
    w.put<std::uint64_t>(t.nodes.size());
    for (const auto& n : t.nodes) {
      w.put(n.feature);
      w.put(n.threshold);
      w.put(n.left);
      w.put(n.right);
      w.put(n.leaf_begin);
      w.put(n.leaf_count);
    }
    w.put_vector(t.leaf_rows);
  }
}

inline QuantileForest read_forest(BinaryReader& r) {
  const auto inputs = r.get<std::int64_t>();
  const auto rooms = r.get<std::int64_t>();
  QuantileForest f(inputs, rooms, r.get_grid());
  const auto stores = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < stores; ++i) f.add_store(std::make_shared<const Matrix>(r.get_matrix<double>()));
  const auto trees = r.get<std::uint64_t>();
  for (std::uint64_t b = 0; b < trees; ++b) {
    QuantileTree t;
    t.store = r.get<std::uint32_t>();
    const auto nodes = r.get<std::uint64_t>();
    if (nodes > r.remaining()) throw InputError("corrupt node count");
    t.nodes.resize(nodes);
    for (auto& n : t.nodes) {
      n.feature = r.get<std::int32_t>();
      n.threshold = r.get<double>();
      n.left = r.get<std::int32_t>();
      n.right = r.get<std::int32_t>();
      n.leaf_begin = r.get<std::uint32_t>();
      n.leaf_count = r.get<std::uint32_t>();
    }
    t.leaf_rows = r.get_vector<std::uint32_t>();
    const Index store_rows = t.store < f.stores().size() ? f.stores()[t.store]->rows() : 0;
    for (const auto& n : t.nodes) {
      const bool bad_split = !n.is_leaf() && (n.feature >= inputs || n.left <= 0 || n.right <= 0 ||
                                              static_cast<std::size_t>(std::max(n.left, n.right)) >= t.nodes.size());
      const bool bad_leaf = n.is_leaf() && (n.leaf_count == 0 ||
                                            static_cast<std::uint64_t>(n.leaf_begin) + n.leaf_count > t.leaf_rows.size());
      if (bad_split || bad_leaf) throw InputError("corrupt tree structure");
    }
    for (auto row : t.leaf_rows) {
      if (static_cast<Index>(row) >= store_rows) throw InputError("corrupt leaf row index");
    }
    f.add_tree(std::move(t));
  }
  return f;
}

inline void write_model(BinaryWriter& w, const QuantileModel& m) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(kind_of(m)));
  switch (kind_of(m)) {
    case ModelKind::Linear: {
      const auto& l = std::get<LinearQuantileModel>(m);
      w.put<std::int64_t>(l.rooms);
      w.put_grid(l.grid);
      w.put_matrix(l.weights);
      break;
    }
    case ModelKind::Mlp: write_mlp(w, std::get<QuantileMlp>(m)); break;
    case ModelKind::Forest: write_forest(w, std::get<QuantileForest>(m)); break;
  }
}

inline QuantileModel read_model(BinaryReader& r) {
  const auto tag = r.get<std::uint8_t>();
  switch (tag) {
    case static_cast<std::uint8_t>(ModelKind::Linear): {
      LinearQuantileModel l;
      l.rooms = r.get<std::int64_t>();
      l.grid = r.get_grid();
      l.weights = r.get_matrix<double>();
      if (l.weights.rows() < 1 || l.weights.cols() != l.rooms * static_cast<Index>(l.grid.size())) {
        throw InputError("corrupt linear model shape");
      }
      return l;
    }
    case static_cast<std::uint8_t>(ModelKind::Mlp): return read_mlp(r);
    case static_cast<std::uint8_t>(ModelKind::Forest): return read_forest(r);
    default: throw InputError("unknown model kind tag " + std::to_string(tag));
  }
}

}  // namespace hybridq::io
