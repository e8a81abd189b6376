#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"

namespace odsynth::detectors {

struct KnnConfig {
  std::vector<std::size_t> ks{5, 10, 20, 50};
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

// Distance from each query row to its k-th nearest context row (exact,
// brute force). Higher means more anomalous.
inline std::vector<double> knn_score(const Matrix& context, const Matrix& query, std::size_t k) {
  if (k == 0 || k > context.rows()) throw DomainError("knn_score: k must lie in [1, context size]");
  if (context.cols() != query.cols()) throw DataError("knn_score: context and query widths differ");
  std::vector<double> out(query.rows());
  std::vector<double> dist(context.rows());
  for (std::size_t i = 0; i < query.rows(); ++i) {
    for (std::size_t c = 0; c < context.rows(); ++c) dist[c] = squared_distance(query.row(i), context.row(c));
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    out[i] = std::sqrt(dist[k - 1]);
  }
  return out;
}

// Scores for several k from one distance pass; result[j] matches ks[j].
inline std::vector<std::vector<double>> knn_scores_multi(const Matrix& context, const Matrix& query,
                                                         std::span<const std::size_t> ks) {
  for (auto k : ks)
    if (k == 0 || k > context.rows()) throw DomainError("knn_score: k must lie in [1, context size]");
  if (context.cols() != query.cols()) throw DataError("knn_score: context and query widths differ");
  std::vector<std::vector<double>> out(ks.size(), std::vector<double>(query.rows()));
  if (ks.empty()) return out;
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  std::vector<double> dist(context.rows());
  for (std::size_t i = 0; i < query.rows(); ++i) {
    for (std::size_t c = 0; c < context.rows(); ++c) dist[c] = squared_distance(query.row(i), context.row(c));
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kmax), dist.end());
    for (std::size_t j = 0; j < ks.size(); ++j) out[j][i] = std::sqrt(dist[ks[j] - 1]);
  }
  return out;
}

// Column-wise z-scoring with statistics from the context; constant columns
// are centred only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& context) {
    Standardizer s;
    const std::size_t d = context.cols();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    const double n = static_cast<double>(context.rows());
    for (std::size_t r = 0; r < context.rows(); ++r)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += context(r, j);
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < context.rows(); ++r)
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = context(r, j) - s.mean[j];
        var[j] += diff * diff;
      }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / n);
      s.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  Matrix transform(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < x.cols(); ++j) out(r, j) = (x(r, j) - mean[j]) / scale[j];
    return out;
  }
};

}  // namespace odsynth::detectors
