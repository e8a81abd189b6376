#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"
#include "odsynth/core/seed.hpp"

namespace odsynth::detectors {

struct IForestConfig {
  std::size_t n_estimators = 100;
  std::size_t max_samples = 256;
  double max_features = 1.0;  // fraction of columns each tree may split on
};

// Average unsuccessful-search path length in a BST of n points.
inline double average_path_length(double n) {
  if (n <= 1.0) return 0.0;
  if (n == 2.0) return 1.0;
  constexpr double euler_gamma = 0.5772156649015329;
  const double harmonic = std::log(n - 1.0) + euler_gamma;
  return 2.0 * harmonic - 2.0 * (n - 1.0) / n;
}

struct IsolationTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t size = 0;
    std::uint32_t depth = 0;
  };
  std::vector<Node> nodes;

  double path_length(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return static_cast<double>(nodes[i].depth) + average_path_length(static_cast<double>(nodes[i].size));
  }
};

struct IsolationForest {
  std::vector<IsolationTree> trees;
  std::size_t sample_size = 0;
  std::size_t dim = 0;
};

namespace detail {

inline void grow(IsolationTree& tree, const Matrix& x, std::vector<std::size_t>& rows, std::size_t begin,
                 std::size_t end, std::uint32_t depth, std::uint32_t limit, std::span<const std::size_t> features,
                 Rng& rng) {
  const auto me = static_cast<std::uint32_t>(tree.nodes.size());
  tree.nodes.push_back({-1, 0.0, 0, 0, static_cast<std::uint32_t>(end - begin), depth});
  if (end - begin <= 1 || depth >= limit) return;

  std::vector<std::size_t> candidates;
  std::vector<std::pair<double, double>> bounds;
  for (auto f : features) {
    double lo = x(rows[begin], f), hi = lo;
    for (std::size_t r = begin + 1; r < end; ++r) {
      const double v = x(rows[r], f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi > lo) {
      candidates.push_back(f);
      bounds.emplace_back(lo, hi);
    }
  }
  if (candidates.empty()) return;
  const auto pick = uniform_index(rng, candidates.size());
  const auto f = candidates[pick];
  const auto [lo, hi] = bounds[pick];
  double split = uniform(rng, lo, hi);
  if (split <= lo) split = std::nextafter(lo, hi);

  const auto mid = static_cast<std::size_t>(
      std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t r) { return x(r, f) < split; }) -
      rows.begin());
  tree.nodes[me].feature = static_cast<std::int32_t>(f);
  tree.nodes[me].threshold = split;
  tree.nodes[me].left = static_cast<std::uint32_t>(tree.nodes.size());
  grow(tree, x, rows, begin, mid, depth + 1, limit, features, rng);
  tree.nodes[me].right = static_cast<std::uint32_t>(tree.nodes.size());
  grow(tree, x, rows, mid, end, depth + 1, limit, features, rng);
}

}  // namespace detail

// Each tree: subsample without replacement, split on a uniform feature among
// those non-constant in the node at a uniform threshold, stop at isolation or
// depth ceil(log2 psi).
inline IsolationForest iforest_fit(const Matrix& context, const IForestConfig& cfg, const SeedPath& seed) {
  if (context.rows() == 0 || context.cols() == 0) throw DataError("iforest_fit: empty context");
  if (cfg.n_estimators == 0 || cfg.max_samples == 0 || !(cfg.max_features > 0.0 && cfg.max_features <= 1.0))
    throw ConfigError("iforest: n_estimators, max_samples must be positive and max_features in (0,1]");
  IsolationForest forest;
  forest.dim = context.cols();
  forest.sample_size = std::min(cfg.max_samples, context.rows());
  const auto limit = static_cast<std::uint32_t>(std::ceil(std::log2(std::max<double>(2.0, forest.sample_size))));
  const auto n_feat = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(cfg.max_features * static_cast<double>(context.cols()))));
  forest.trees.resize(cfg.n_estimators);
  for (std::size_t t = 0; t < cfg.n_estimators; ++t) {
    Rng rng = seed.child(t).rng();
    auto rows = sample_without_replacement(rng, context.rows(), forest.sample_size);
    const auto features = n_feat == context.cols() ? [&] {
      std::vector<std::size_t> all(context.cols());
      for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
      return all;
    }()
                                                   : sorted_sample_without_replacement(rng, context.cols(), n_feat);
    detail::grow(forest.trees[t], context, rows, 0, rows.size(), 0, limit, features, rng);
  }
  return forest;
}

// 2^(-E[h(x)] / c(psi)); higher means more anomalous.
inline std::vector<double> iforest_score(const IsolationForest& forest, const Matrix& query) {
  if (query.cols() != forest.dim) throw DataError("iforest_score: query width differs from fitted width");
  const double c = average_path_length(static_cast<double>(forest.sample_size));
  std::vector<double> out(query.rows());
  for (std::size_t i = 0; i < query.rows(); ++i) {
    double total = 0.0;
    for (const auto& t : forest.trees) total += t.path_length(query.row(i));
    const double mean = total / static_cast<double>(forest.trees.size());
    out[i] = c > 0.0 ? std::exp2(-mean / c) : 0.5;
  }
  return out;
}

}  // namespace odsynth::detectors
