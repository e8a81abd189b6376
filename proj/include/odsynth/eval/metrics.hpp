#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "odsynth/core/error.hpp"

namespace odsynth::eval {

// Mean (fractional) ranks starting at 1; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace detail {
inline void check_binary(std::span<const double> scores, std::span<const int> labels, std::size_t& n_pos,
                         std::size_t& n_neg) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  n_pos = 0;
  n_neg = 0;
  for (int l : labels) {
    if (l == 1) {
      ++n_pos;
    } else if (l == 0) {
      ++n_neg;
    } else {
      throw DataError("labels must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) throw DomainError("metric needs both classes present (single-class labels)");
}
}  // namespace detail

// P(score_outlier > score_inlier) + 0.5 P(tie), via the rank-sum statistic.
// Label 1 marks an outlier.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos, n_neg;
  detail::check_binary(scores, labels, n_pos, n_neg);
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) rank_sum += ranks[i];
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// Average precision: sum over distinct score thresholds (descending) of
// recall increment times precision at that threshold.
inline double auprc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos, n_neg;
  detail::check_binary(scores, labels, n_pos, n_neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] == 1;
      ++seen;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

}  // namespace odsynth::eval
