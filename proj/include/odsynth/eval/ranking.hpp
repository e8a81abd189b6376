#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "odsynth/core/error.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/eval/metrics.hpp"
#include "odsynth/eval/score_table.hpp"

namespace odsynth::eval {

// Per-model value with its spread over datasets (population sd).
struct ModelStat {
  double mean = 0.0;
  double sd = 0.0;
};

namespace detail {
inline std::vector<ModelStat> column_stats(const std::vector<std::vector<double>>& per_dataset, std::size_t n_models) {
  std::vector<ModelStat> out(n_models);
  const double nd = static_cast<double>(per_dataset.size());
  for (std::size_t m = 0; m < n_models; ++m) {
    double s = 0.0;
    for (const auto& row : per_dataset) s += row[m];
    const double mean = s / nd;
    double v = 0.0;
    for (const auto& row : per_dataset) v += (row[m] - mean) * (row[m] - mean);
    out[m] = {mean, std::sqrt(v / nd)};
  }
  return out;
}
}  // namespace detail

// Rank by error ascending per dataset, mean rank for ties.
inline std::vector<ModelStat> avg_rank(const ScoreTable& t) {
  t.require_complete();
  std::vector<std::vector<double>> ranks;
  for (std::size_t d = 0; d < t.n_datasets(); ++d) ranks.push_back(average_ranks(t.errors_for_dataset(d)));
  return detail::column_stats(ranks, t.n_models());
}

enum class EloOrder { declared, sorted, shuffle_average };

inline std::string_view to_string(EloOrder o) {
  switch (o) {
    case EloOrder::declared: return "declared";
    case EloOrder::sorted: return "sorted";
    case EloOrder::shuffle_average: return "shuffle_average";
  }
  return "declared";
}

inline EloOrder parse_elo_order(std::string_view s) {
  for (auto o : {EloOrder::declared, EloOrder::sorted, EloOrder::shuffle_average})
    if (to_string(o) == s) return o;
  throw ConfigError("unknown ELO order '" + std::string(s) + "'");
}

struct EloConfig {
  double r0 = 1000.0;
  double k = 32.0;
  double tie_eps = 0.005;  // metric units
  EloOrder order = EloOrder::declared;
  std::size_t shuffles = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(k > 0.0)) throw ConfigError("ELO K must be positive");
    if (!(tie_eps >= 0.0)) throw ConfigError("ELO tie threshold must be non-negative");
    if (order == EloOrder::shuffle_average && shuffles == 0) throw ConfigError("ELO needs at least one shuffle");
  }
};

inline double elo_expected(double r, double r_opp) { return 1.0 / (1.0 + std::pow(10.0, (r_opp - r) / 400.0)); }

// Outcome for a against b: 1 win, 0 loss, 0.5 when |E_a - E_b| <= eps.
inline double match_outcome(double err_a, double err_b, double eps) {
  if (std::abs(err_a - err_b) <= eps) return 0.5;
  return err_a < err_b ? 1.0 : 0.0;
}

// Round-robin per dataset in the given dataset order; pairs follow
// lexicographic model-name order. Each match updates both players.
inline std::vector<double> elo_in_order(const ScoreTable& t, const EloConfig& cfg, std::span<const std::size_t> order) {
  std::vector<std::size_t> by_name(t.n_models());
  std::iota(by_name.begin(), by_name.end(), std::size_t{0});
  std::stable_sort(by_name.begin(), by_name.end(), [&](auto a, auto b) { return t.models()[a] < t.models()[b]; });
  std::vector<double> r(t.n_models(), cfg.r0);
  for (auto d : order) {
    for (std::size_t i = 0; i < by_name.size(); ++i) {
      for (std::size_t j = i + 1; j < by_name.size(); ++j) {
        const auto a = by_name[i], b = by_name[j];
        const double s = match_outcome(t.error(d, a), t.error(d, b), cfg.tie_eps);
        const double delta = cfg.k * (s - elo_expected(r[a], r[b]));
        r[a] += delta;
        r[b] -= delta;
      }
    }
  }
  return r;
}

inline std::vector<double> elo(const ScoreTable& t, const EloConfig& cfg = {}) {
  cfg.validate();
  t.require_complete();
  std::vector<std::size_t> order(t.n_datasets());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg.order == EloOrder::sorted)
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return t.datasets()[a] < t.datasets()[b]; });
  if (cfg.order != EloOrder::shuffle_average) return elo_in_order(t, cfg, order);
  std::vector<double> acc(t.n_models(), 0.0);
  const SeedPath root(cfg.seed);
  for (std::size_t s = 0; s < cfg.shuffles; ++s) {
    auto perm = order;
    Rng rng = root.child(s).rng();
    shuffle(rng, perm);
    const auto r = elo_in_order(t, cfg, perm);
    for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += r[m];
  }
  for (auto& v : acc) v /= static_cast<double>(cfg.shuffles);
  return acc;
}

// Fraction of (dataset, opponent) pairs won, exact ties counting half.
// Undefined (returned as 0 with the flag) for a single-model table.
struct WinrateResult {
  std::vector<double> values;
  bool undefined = false;
};

inline WinrateResult winrate(const ScoreTable& t) {
  t.require_complete();
  WinrateResult out;
  out.values.assign(t.n_models(), 0.0);
  if (t.n_models() < 2) {
    out.undefined = true;
    return out;
  }
  for (std::size_t d = 0; d < t.n_datasets(); ++d) {
    const auto e = t.errors_for_dataset(d);
    for (std::size_t m = 0; m < e.size(); ++m)
      for (std::size_t o = 0; o < e.size(); ++o)
        if (o != m) out.values[m] += e[m] < e[o] ? 1.0 : (e[m] == e[o] ? 0.5 : 0.0);
  }
  const double denom = static_cast<double>(t.n_datasets() * (t.n_models() - 1));
  for (auto& v : out.values) v /= denom;
  return out;
}

// min_max: 1 - (E - min)/(max - min) per dataset, 1.0 when all errors agree.
// ratio_to_best: metric / best metric on the dataset.
enum class RaucMode { min_max, ratio_to_best };

inline std::string_view to_string(RaucMode m) { return m == RaucMode::min_max ? "min_max" : "ratio_to_best"; }
inline RaucMode parse_rauc_mode(std::string_view s) {
  if (s == "min_max") return RaucMode::min_max;
  if (s == "ratio_to_best") return RaucMode::ratio_to_best;
  throw ConfigError("unknown rAUC mode '" + std::string(s) + "'");
}

inline std::vector<ModelStat> rauc(const ScoreTable& t, RaucMode mode = RaucMode::min_max) {
  t.require_complete();
  std::vector<std::vector<double>> rows;
  for (std::size_t d = 0; d < t.n_datasets(); ++d) {
    const auto e = t.errors_for_dataset(d);
    const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
    std::vector<double> row(e.size(), 1.0);
    for (std::size_t m = 0; m < e.size(); ++m) {
      if (mode == RaucMode::min_max) {
        if (*hi > *lo) row[m] = 1.0 - (e[m] - *lo) / (*hi - *lo);
      } else {
        const double best = 1.0 - *lo;
        row[m] = best > 0.0 ? (1.0 - e[m]) / best : 1.0;
      }
    }
    rows.push_back(std::move(row));
  }
  return detail::column_stats(rows, t.n_models());
}

// mean_error: (1 - E(m*)/E(m)) * 100 on dataset-mean errors, m* the lowest.
// per_dataset: mean over datasets of (1 - E_best/E(m)) as a fraction.
enum class ChampionDeltaMode { mean_error, per_dataset };

inline std::string_view to_string(ChampionDeltaMode m) {
  return m == ChampionDeltaMode::mean_error ? "mean_error" : "per_dataset";
}
inline ChampionDeltaMode parse_champion_delta_mode(std::string_view s) {
  if (s == "mean_error") return ChampionDeltaMode::mean_error;
  if (s == "per_dataset") return ChampionDeltaMode::per_dataset;
  throw ConfigError("unknown champion delta mode '" + std::string(s) + "'");
}

struct ChampionDeltaResult {
  std::vector<double> values;
  std::size_t champion = 0;
  std::vector<bool> undefined;  // zero error for a non-champion; value reported as 0
};

inline ChampionDeltaResult champion_delta(const ScoreTable& t, ChampionDeltaMode mode = ChampionDeltaMode::mean_error) {
  t.require_complete();
  const std::size_t nm = t.n_models(), nd = t.n_datasets();
  ChampionDeltaResult out;
  out.values.assign(nm, 0.0);
  out.undefined.assign(nm, false);
  std::vector<double> mean_err(nm, 0.0);
  for (std::size_t d = 0; d < nd; ++d)
    for (std::size_t m = 0; m < nm; ++m) mean_err[m] += t.error(d, m) / static_cast<double>(nd);
  out.champion = static_cast<std::size_t>(std::min_element(mean_err.begin(), mean_err.end()) - mean_err.begin());
  if (mode == ChampionDeltaMode::mean_error) {
    for (std::size_t m = 0; m < nm; ++m) {
      if (m == out.champion) continue;
      if (mean_err[m] == 0.0) {
        out.undefined[m] = true;
        continue;
      }
      out.values[m] = (1.0 - mean_err[out.champion] / mean_err[m]) * 100.0;
    }
    return out;
  }
  for (std::size_t d = 0; d < nd; ++d) {
    const auto e = t.errors_for_dataset(d);
    const double best = *std::min_element(e.begin(), e.end());
    for (std::size_t m = 0; m < nm; ++m)
      if (e[m] > 0.0) out.values[m] += (1.0 - best / e[m]) / static_cast<double>(nd);
  }
  return out;
}

// Fractions of datasets where `ref` beats, loses to, or ties `other`
// (|E_ref - E_other| <= eps counts as a tie).
struct WinLoseTie {
  double win = 0.0;
  double lose = 0.0;
  double tie = 0.0;
};

inline WinLoseTie win_lose_tie(const ScoreTable& t, std::size_t ref, std::size_t other, double eps = 0.005) {
  t.require_complete();
  std::size_t w = 0, l = 0, ti = 0;
  for (std::size_t d = 0; d < t.n_datasets(); ++d) {
    const double s = match_outcome(t.error(d, ref), t.error(d, other), eps);
    if (s == 1.0) ++w;
    else if (s == 0.0) ++l;
    else ++ti;
  }
  const double n = static_cast<double>(t.n_datasets());
  return {static_cast<double>(w) / n, static_cast<double>(l) / n, static_cast<double>(ti) / n};
}

// Paired differences metric(ref) - metric(other) per dataset.
inline std::vector<double> paired_differences(const ScoreTable& t, std::size_t ref, std::size_t other) {
  t.require_complete();
  std::vector<double> out(t.n_datasets());
  for (std::size_t d = 0; d < t.n_datasets(); ++d) out[d] = t.value(d, ref) - t.value(d, other);
  return out;
}

}  // namespace odsynth::eval
