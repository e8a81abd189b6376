#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "odsynth/core/error.hpp"
#include "odsynth/detectors/iforest.hpp"
#include "odsynth/detectors/knn.hpp"
#include "odsynth/eval/metrics.hpp"
#include "odsynth/priors/registry.hpp"

namespace odsynth::eval {

enum class Baseline { knn, iforest };

inline std::string_view to_string(Baseline b) { return b == Baseline::knn ? "knn" : "iforest"; }

inline Baseline parse_baseline(std::string_view s) {
  if (s == "knn") return Baseline::knn;
  if (s == "iforest") return Baseline::iforest;
  throw ConfigError("unknown detector '" + std::string(s) + "'");
}

// kNN scores averaged over the k grid, on features z-scored with context
// statistics. k values above the context size are clipped to it.
inline std::vector<double> knn_grid_scores(const Matrix& context, const Matrix& query,
                                           const detectors::KnnConfig& cfg = {}) {
  const auto st = detectors::Standardizer::fit(context);
  const Matrix c = st.transform(context), q = st.transform(query);
  std::vector<std::size_t> ks;
  for (auto k : cfg.ks) ks.push_back(std::min(k, c.rows()));
  const auto per_k = detectors::knn_scores_multi(c, q, ks);
  std::vector<double> out(q.rows(), 0.0);
  for (const auto& s : per_k)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s[i] / static_cast<double>(per_k.size());
  return out;
}

inline std::vector<double> baseline_scores(Baseline b, const Matrix& context, const Matrix& query,
                                           const SeedPath& seed) {
  if (b == Baseline::knn) return knn_grid_scores(context, query);
  const auto forest = detectors::iforest_fit(context, detectors::IForestConfig{}, seed);
  return detectors::iforest_score(forest, query);
}

// kNN AUROC is the mean of per-k AUROCs over the grid.
inline double knn_grid_auroc(const Matrix& context, const LabeledDataset& query, const detectors::KnnConfig& cfg = {}) {
  const auto st = detectors::Standardizer::fit(context);
  const Matrix c = st.transform(context), q = st.transform(query.features());
  std::vector<std::size_t> ks;
  for (auto k : cfg.ks) ks.push_back(std::min(k, c.rows()));
  const auto per_k = detectors::knn_scores_multi(c, q, ks);
  const auto y = query.label_ints();
  double total = 0.0;
  for (const auto& s : per_k) total += auroc(s, y);
  return total / static_cast<double>(per_k.size());
}

inline double baseline_auroc(Baseline b, const Task& task, const SeedPath& seed) {
  if (b == Baseline::knn) return knn_grid_auroc(task.context, task.query);
  return auroc(baseline_scores(b, task.context, task.query.features(), seed), task.query.label_ints());
}

// Synthetic benchmark protocol: n_in inliers with contamination drawn from the
// prior's range; half the inliers become the clean context.
struct BenchmarkProtocol {
  std::size_t n_inliers = 1000;
  double context_fraction = 0.5;
};

inline Task make_benchmark_task(const PriorConfigs& cfgs, const PriorArm& arm, const BenchmarkProtocol& p,
                                const SeedPath& seed) {
  const auto ds = generate_with_contamination(cfgs, arm, p.n_inliers, seed.child(0));
  const auto n_ctx = static_cast<std::size_t>(p.context_fraction * static_cast<double>(p.n_inliers));
  return split_context(ds, n_ctx, seed.child(1));
}

}  // namespace odsynth::eval
