#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/eval/metrics.hpp"

namespace odsynth::detectors {

struct EnsembleConfig {
  std::size_t n_members = 50;
  std::size_t context_cap = 1000;
  std::size_t dim_cap = 100;
};

// Base scorer: (context, query, member seed) -> one score per query row.
using Scorer = std::function<std::vector<double>(const Matrix&, const Matrix&, const SeedPath&)>;

// Ranks mapped to [0,1] (ties share the mean rank); a single score maps to 0.5.
inline std::vector<double> rank_normalize(std::span<const double> scores) {
  std::vector<double> r = eval::average_ranks(scores);
  const double n = static_cast<double>(scores.size());
  for (auto& v : r) v = n > 1.0 ? (v - 1.0) / (n - 1.0) : 0.5;
  return r;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; first exception wins.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Member i draws its rows and columns from seed.child(i), so results do not
// depend on scheduling or the number of jobs.
inline std::vector<double> ensemble_score(const Scorer& scorer, const Matrix& context, const Matrix& query,
                                          const EnsembleConfig& cfg, const SeedPath& seed, std::size_t jobs = 1) {
  if (cfg.n_members == 0) throw ConfigError("ensemble: n_members must be >= 1");
  if (context.cols() != query.cols()) throw DataError("ensemble: context and query widths differ");
  const std::size_t n_rows = std::min(cfg.context_cap, context.rows());
  const std::size_t n_cols = std::min(cfg.dim_cap, context.cols());
  std::vector<std::vector<double>> member(cfg.n_members);
  parallel_for(cfg.n_members, jobs, [&](std::size_t i) {
    const SeedPath s = seed.child(i);
    Rng rng = s.child(0).rng();
    const auto rows = sorted_sample_without_replacement(rng, context.rows(), n_rows);
    const auto cols = sorted_sample_without_replacement(rng, context.cols(), n_cols);
    const Matrix ctx = context.select_rows(rows).select_cols(cols);
    const Matrix q = query.select_cols(cols);
    auto scores = scorer(ctx, q, s.child(1));
    if (scores.size() != query.rows()) throw DataError("ensemble: scorer returned wrong number of scores");
    member[i] = rank_normalize(scores);
  });
  std::vector<double> out(query.rows(), 0.0);
  for (const auto& m : member)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += m[j];
  for (auto& v : out) v /= static_cast<double>(cfg.n_members);
  return out;
}

}  // namespace odsynth::detectors
