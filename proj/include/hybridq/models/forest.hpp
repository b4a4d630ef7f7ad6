#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hybridq/core/quantile_grid.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"
#include "hybridq/models/train_config.hpp"

namespace hybridq {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t leaf_begin = 0;  // leaf: range into QuantileTree::leaf_rows
  std::uint32_t leaf_count = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// One regression tree whose leaves keep the row indices (with bootstrap
/// multiplicity) of the training samples they received. Row indices refer
/// to the forest's value store `store`.
struct QuantileTree {
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> leaf_rows;
  std::uint32_t store = 0;

  Index leaf_of(const double* x) const {
    Index i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return i;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }

  bool operator==(const QuantileTree&) const = default;
};

/// Quantile regression forest: each tree routes a query to a leaf, and the
/// predictive distribution pools the leaf responses with weight
/// 1 / (B * leaf size) per retained sample.
class QuantileForest {
 public:
  QuantileForest() = default;
  QuantileForest(Index inputs, Index rooms, QuantileGrid grid) : inputs_(inputs), rooms_(rooms), grid_(std::move(grid)) {}

  Index inputs() const { return inputs_; }
  Index rooms() const { return rooms_; }
  const QuantileGrid& grid() const { return grid_; }
  std::size_t tree_count() const { return trees_.size(); }
  const std::vector<QuantileTree>& trees() const { return trees_; }
  const std::vector<std::shared_ptr<const Matrix>>& stores() const { return stores_; }

  std::uint32_t add_store(std::shared_ptr<const Matrix> values) {
    if (!values || values->cols() != rooms_) throw InputError("value store width differs from room count");
    stores_.push_back(std::move(values));
    return static_cast<std::uint32_t>(stores_.size() - 1);
  }

  void add_tree(QuantileTree tree) {
    if (tree.store >= stores_.size()) throw InputError("tree refers to a missing value store");
    trees_.push_back(std::move(tree));
  }

  /// Level-p quantiles of the pooled leaf distribution, N x (K * Q), with
  /// the order-statistic convention: the smallest retained value whose
  /// cumulative weight reaches p.
  Matrix predict(const Matrix& x) const {
    if (x.cols() != inputs_) {
      throw InputError("forest expects " + std::to_string(inputs_) + " input columns, got " + std::to_string(x.cols()));
    }
    if (trees_.empty()) throw UsageError("forest has no trees");
    const Index q_count = static_cast<Index>(grid_.size());
    Matrix out(x.rows(), rooms_ * q_count);
    std::vector<std::pair<double, double>> pool;
    std::vector<Index> leaves(trees_.size());
    const double inv_b = 1.0 / static_cast<double>(trees_.size());
    for (Index n = 0; n < x.rows(); ++n) {
      const Eigen::Matrix<double, 1, Eigen::Dynamic> row = x.row(n);
      for (std::size_t b = 0; b < trees_.size(); ++b) leaves[b] = trees_[b].leaf_of(row.data());
      for (Index k = 0; k < rooms_; ++k) {
        pool.clear();
        for (std::size_t b = 0; b < trees_.size(); ++b) {
          const auto& tree = trees_[b];
          const auto& leaf = tree.nodes[static_cast<std::size_t>(leaves[b])];
          const Matrix& store = *stores_[tree.store];
          const double w = inv_b / static_cast<double>(leaf.leaf_count);
          for (std::uint32_t j = 0; j < leaf.leaf_count; ++j) {
            pool.emplace_back(store(tree.leaf_rows[leaf.leaf_begin + j], k), w);
          }
        }
        std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        double cum = 0.0;
        std::size_t pos = 0;
        for (Index q = 0; q < q_count; ++q) {
          const double target = grid_[static_cast<std::size_t>(q)] - kLevelTolerance;
          while (pos < pool.size() && cum + pool[pos].second < target) cum += pool[pos++].second;
          out(n, k * q_count + q) = pool[std::min(pos, pool.size() - 1)].first;
        }
      }
    }
    return out;
  }

  bool operator==(const QuantileForest& o) const {
    if (inputs_ != o.inputs_ || rooms_ != o.rooms_ || !(grid_ == o.grid_) || trees_ != o.trees_) return false;
    if (stores_.size() != o.stores_.size()) return false;
    for (std::size_t i = 0; i < stores_.size(); ++i) {
      if (!same_values(*stores_[i], *o.stores_[i])) return false;
    }
    return true;
  }

 private:
  Index inputs_ = 0;
  Index rooms_ = 0;
  QuantileGrid grid_;
  std::vector<QuantileTree> trees_;
  std::vector<std::shared_ptr<const Matrix>> stores_;
};

/// Columns whose squared error guides the splits, each with a weight.
struct SplitTargets {
  const Matrix* values = nullptr;
  std::vector<double> weights;  // one per column; empty means all 1
};

namespace detail {

// Grows one tree by exact greedy search over presorted feature orders. Every
// node's samples occupy the same [begin, end) slice of each order array.
class TreeGrower {
 public:
  TreeGrower(const Matrix& x, const SplitTargets& targets, const TrainConfig& cfg)
      : x_(x), t_(*targets.values), cfg_(cfg) {
    w_ = targets.weights.empty() ? std::vector<double>(static_cast<std::size_t>(t_.cols()), 1.0) : targets.weights;
    // Rows of each feature sorted once; per-tree orders are derived from it.
    sorted_rows_.resize(static_cast<std::size_t>(x.cols()));
    for (Index f = 0; f < x.cols(); ++f) {
      auto& s = sorted_rows_[static_cast<std::size_t>(f)];
      s.resize(static_cast<std::size_t>(x.rows()));
      std::iota(s.begin(), s.end(), std::uint32_t{0});
      std::stable_sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    }
  }

  QuantileTree grow(std::uint64_t seed, std::uint32_t store) {
    const Index n = x_.rows(), d = x_.cols();
    std::mt19937_64 rng(seed);
    // Sample multiplicities.
    std::vector<std::uint32_t> count(static_cast<std::size_t>(n), cfg_.bootstrap ? 0u : 1u);
    if (cfg_.bootstrap) {
      std::uniform_int_distribution<Index> pick(0, n - 1);
      for (Index i = 0; i < n; ++i) ++count[static_cast<std::size_t>(pick(rng))];
    }
    sample_row_.clear();
    std::vector<std::uint32_t> first_pos(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      first_pos[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(sample_row_.size());
      for (std::uint32_t c = 0; c < count[static_cast<std::size_t>(i)]; ++c) sample_row_.push_back(static_cast<std::uint32_t>(i));
    }
    const std::size_t m = sample_row_.size();
    order_.assign(static_cast<std::size_t>(d), std::vector<std::uint32_t>(m));
    for (Index f = 0; f < d; ++f) {
      auto& o = order_[static_cast<std::size_t>(f)];
      std::size_t pos = 0;
      for (std::uint32_t r : sorted_rows_[static_cast<std::size_t>(f)]) {
        for (std::uint32_t c = 0; c < count[r]; ++c) o[pos++] = first_pos[r] + c;
      }
    }
    goes_left_.assign(m, 0);
    buffer_.resize(m);

    QuantileTree tree;
    tree.store = store;
    features_.resize(static_cast<std::size_t>(d));
    std::iota(features_.begin(), features_.end(), Index{0});
    const auto tried = std::max<Index>(1, static_cast<Index>(std::ceil(cfg_.max_features * static_cast<double>(d))));

    struct Pending {
      std::int32_t node;
      std::size_t begin, end;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, m});
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      Split best;
      if (p.end - p.begin >= cfg_.min_samples_split && p.end - p.begin >= 2 * cfg_.min_samples_leaf) {
        if (tried < d) {
          for (Index i = 0; i < tried; ++i) {
            std::uniform_int_distribution<Index> pick(i, d - 1);
            std::swap(features_[static_cast<std::size_t>(i)], features_[static_cast<std::size_t>(pick(rng))]);
          }
          std::sort(features_.begin(), features_.begin() + tried);
        }
        best = find_split(p.begin, p.end, tried);
      }
      if (best.feature < 0) {
        auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
        node.leaf_begin = static_cast<std::uint32_t>(tree.leaf_rows.size());
        node.leaf_count = static_cast<std::uint32_t>(p.end - p.begin);
        const auto& o = order_[0];
        for (std::size_t i = p.begin; i < p.end; ++i) tree.leaf_rows.push_back(sample_row_[o[i]]);
        continue;
      }
      const std::size_t mid = partition(p.begin, p.end, best);
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
      node.feature = static_cast<std::int32_t>(best.feature);
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, mid, p.end});
      stack.push_back({left, p.begin, mid});
    }
    return tree;
  }

 private:
  struct Split {
    Index feature = -1;
    double threshold = 0.0;
    std::size_t left_count = 0;
  };

  Split find_split(std::size_t begin, std::size_t end, Index tried) {
    const Index c = t_.cols();
    const std::size_t n = end - begin;
    const std::size_t min_leaf = cfg_.min_samples_leaf;
    total_.assign(static_cast<std::size_t>(c), 0.0);
    const auto& o0 = order_[0];
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = sample_row_[o0[i]];
      for (Index j = 0; j < c; ++j) total_[static_cast<std::size_t>(j)] += t_(r, j);
    }
    double parent = 0.0;
    for (Index j = 0; j < c; ++j) parent += w_[static_cast<std::size_t>(j)] * total_[static_cast<std::size_t>(j)] * total_[static_cast<std::size_t>(j)];
    parent /= static_cast<double>(n);

    Split best;
    double best_score = parent + std::max(1e-12, 1e-12 * std::abs(parent));
    left_.resize(static_cast<std::size_t>(c));
    for (Index fi = 0; fi < tried; ++fi) {
      const Index f = features_[static_cast<std::size_t>(fi)];
      const auto& o = order_[static_cast<std::size_t>(f)];
      std::fill(left_.begin(), left_.end(), 0.0);
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const auto r = sample_row_[o[i]];
        for (Index j = 0; j < c; ++j) left_[static_cast<std::size_t>(j)] += t_(r, j);
        const std::size_t nl = i + 1 - begin, nr = n - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double xa = x_(r, f), xb = x_(sample_row_[o[i + 1]], f);
        if (!(xa < xb)) continue;
        double score = 0.0;
        for (Index j = 0; j < c; ++j) {
          const double l = left_[static_cast<std::size_t>(j)], rt = total_[static_cast<std::size_t>(j)] - l;
          score += w_[static_cast<std::size_t>(j)] * (l * l / static_cast<double>(nl) + rt * rt / static_cast<double>(nr));
        }
        if (score > best_score) {
          best_score = score;
          best.feature = f;
          double mid = xa + 0.5 * (xb - xa);
          if (!(mid < xb)) mid = xa;
          best.threshold = mid;
          best.left_count = nl;
        }
      }
    }
    return best;
  }

  // Stable partition of every feature order by the chosen split.
  std::size_t partition(std::size_t begin, std::size_t end, const Split& s) {
    const auto& of = order_[static_cast<std::size_t>(s.feature)];
    for (std::size_t i = begin; i < end; ++i) goes_left_[of[i]] = (i - begin) < s.left_count ? 1 : 0;
    for (auto& o : order_) {
      std::size_t l = begin, r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        if (goes_left_[o[i]]) o[l++] = o[i];
        else buffer_[r++] = o[i];
      }
      std::copy_n(buffer_.begin(), r, o.begin() + static_cast<std::ptrdiff_t>(l));
    }
    return begin + s.left_count;
  }

  const Matrix& x_;
  const Matrix& t_;
  const TrainConfig& cfg_;
  std::vector<double> w_;
  std::vector<std::vector<std::uint32_t>> sorted_rows_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint32_t> sample_row_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> buffer_;
  std::vector<Index> features_;
  std::vector<double> total_, left_;
};

inline std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline void check_forest_inputs(const Matrix& x, const Matrix& split_values, const TrainConfig& cfg) {
  if (x.rows() == 0) throw InputError("forest training needs at least one row");
  if (static_cast<std::size_t>(x.rows()) < cfg.min_samples_split) {
    throw InputError("forest training needs at least min_samples_split = " + std::to_string(cfg.min_samples_split) +
                     " rows, got " + std::to_string(x.rows()));
  }
  if (x.rows() > static_cast<Index>(UINT32_MAX)) throw InputError("too many rows for the forest");
  if (split_values.rows() != x.rows()) throw InputError("split targets and inputs differ in row count");
  if (!x.allFinite() || !split_values.allFinite()) throw InputError("non-finite values in forest training data");
}

}  // namespace detail

/// Adds `count` trees grown on (x, split targets) whose leaves report values
/// from `store` (rows aligned with x). Tree seeds continue from the current
/// tree count so warm-started trees differ from the originals.
inline void grow_trees(QuantileForest& forest, const Matrix& x, const SplitTargets& split,
                       std::shared_ptr<const Matrix> store, std::size_t count, const TrainConfig& cfg) {
  cfg.validate();
  if (count == 0) return;
  detail::check_forest_inputs(x, *split.values, cfg);
  if (x.cols() != forest.inputs()) throw InputError("forest input width mismatch");
  if (store->rows() != x.rows()) throw InputError("value store and inputs differ in row count");
  if (!split.weights.empty() && static_cast<Index>(split.weights.size()) != split.values->cols()) {
    throw InputError("one split weight per target column required");
  }
  const std::uint32_t s = forest.add_store(std::move(store));
  detail::TreeGrower grower(x, split, cfg);
  const std::size_t first = forest.tree_count();
  for (std::size_t b = 0; b < count; ++b) forest.add_tree(grower.grow(detail::tree_seed(cfg.seed, first + b), s));
}

/// Forest on (x -> y) with squared-error splits over all columns of y.
inline QuantileForest fit_forest(const Matrix& x, const Matrix& y, const QuantileGrid& grid, const TrainConfig& cfg) {
  QuantileForest forest(x.cols(), y.cols(), grid);
  auto store = std::make_shared<const Matrix>(y);
  grow_trees(forest, x, SplitTargets{store.get(), {}}, store, cfg.trees, cfg);
  return forest;
}

/// Forest whose splits also see weighted extra targets; predictions pool y only.
inline QuantileForest fit_forest_guided(const Matrix& x, const Matrix& y, const Matrix& extra, double extra_weight,
                                        const QuantileGrid& grid, const TrainConfig& cfg) {
  if (extra.rows() != y.rows()) throw InputError("extra targets and targets differ in row count");
  if (extra_weight < 0.0) throw InputError("extra target weight must be non-negative");
  Matrix guide(y.rows(), y.cols() + extra.cols());
  guide << y, extra;
  std::vector<double> weights(static_cast<std::size_t>(guide.cols()), 1.0);
  std::fill(weights.begin() + y.cols(), weights.end(), extra_weight);
  QuantileForest forest(x.cols(), y.cols(), grid);
  auto store = std::make_shared<const Matrix>(y);
  grow_trees(forest, x, SplitTargets{&guide, std::move(weights)}, store, cfg.trees, cfg);
  return forest;
}

}  // namespace hybridq
