#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/eval/ranking.hpp"
#include "odsynth/eval/score_table.hpp"
#include "odsynth/eval/stats.hpp"

namespace odsynth::eval {

struct EvalOptions {
  EloConfig elo;
  RaucMode rauc_mode = RaucMode::min_max;
  ChampionDeltaMode cd_mode = ChampionDeltaMode::mean_error;
  // Reference model compared against every other row; defaults to the model
  // with the best average rank.
  std::optional<std::string> reference;
  std::size_t n_resamples = 10000;
  std::uint64_t seed = 0;
};

struct ModelRow {
  std::string model;
  ModelStat rank;
  double elo = 0.0;
  double winrate = 0.0;
  ModelStat rauc;
  double champion_delta = 0.0;
  bool champion_delta_undefined = false;
  std::optional<WinLoseTie> wlt;
  std::optional<TestResult> permutation;
  std::optional<TestResult> wilcoxon;
};

struct EvalReport {
  Metric metric = Metric::auroc;
  std::string reference;
  bool winrate_undefined = false;
  std::string champion;
  EvalOptions options;
  std::vector<ModelRow> rows;
};

inline EvalReport evaluate_table(const ScoreTable& t, const EvalOptions& opt = {}) {
  t.require_complete();
  EvalReport rep;
  rep.metric = t.metric();
  rep.options = opt;
  const auto ranks = avg_rank(t);
  const auto ratings = elo(t, opt.elo);
  const auto wr = winrate(t);
  const auto ra = rauc(t, opt.rauc_mode);
  const auto cd = champion_delta(t, opt.cd_mode);
  rep.winrate_undefined = wr.undefined;
  rep.champion = t.models()[cd.champion];
  std::size_t ref = 0;
  if (opt.reference) {
    ref = t.model_index(*opt.reference);
  } else {
    for (std::size_t m = 1; m < t.n_models(); ++m)
      if (ranks[m].mean < ranks[ref].mean) ref = m;
  }
  rep.reference = t.models()[ref];
  for (std::size_t m = 0; m < t.n_models(); ++m) {
    ModelRow row;
    row.model = t.models()[m];
    row.rank = ranks[m];
    row.elo = ratings[m];
    row.winrate = wr.values[m];
    row.rauc = ra[m];
    row.champion_delta = cd.values[m];
    row.champion_delta_undefined = cd.undefined[m];
    if (m != ref) {
      row.wlt = win_lose_tie(t, ref, m, opt.elo.tie_eps);
      const auto diffs = paired_differences(t, ref, m);
      row.permutation = permutation_test(diffs, opt.n_resamples, SeedPath(opt.seed).child(m));
      row.wilcoxon = wilcoxon_test(diffs);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline nlohmann::json to_json(const TestResult& r) {
  return {{"p", r.p}, {"statistic", r.statistic}, {"n", r.n}, {"exact", r.exact}, {"undefined", r.undefined}};
}

inline nlohmann::json to_json(const EvalReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    nlohmann::json j = {{"model", r.model},
                        {"avg_rank", r.rank.mean},
                        {"avg_rank_sd", r.rank.sd},
                        {"elo", r.elo},
                        {"winrate", r.winrate},
                        {"rauc", r.rauc.mean},
                        {"rauc_sd", r.rauc.sd},
                        {"champion_delta", r.champion_delta},
                        {"champion_delta_undefined", r.champion_delta_undefined}};
    if (r.wlt) j["win_lose_tie"] = {r.wlt->win, r.wlt->lose, r.wlt->tie};
    if (r.permutation) j["permutation"] = to_json(*r.permutation);
    if (r.wilcoxon) j["wilcoxon"] = to_json(*r.wilcoxon);
    rows.push_back(std::move(j));
  }
  const auto& o = rep.options;
  return {{"metric", to_string(rep.metric)},
          {"reference", rep.reference},
          {"champion", rep.champion},
          {"winrate_undefined", rep.winrate_undefined},
          {"settings",
           {{"elo_r0", o.elo.r0},
            {"elo_k", o.elo.k},
            {"elo_tie_eps", o.elo.tie_eps},
            {"elo_order", to_string(o.elo.order)},
            {"elo_shuffles", o.elo.shuffles},
            {"rauc_mode", to_string(o.rauc_mode)},
            {"champion_delta_mode", to_string(o.cd_mode)},
            {"n_resamples", o.n_resamples},
            {"seed", o.seed}}},
          {"models", rows}};
}

// Columns: Model, Avg. Rank, ELO, Winrate, rAUC, CΔ, Win/Lose/Tie, p-val
// (permutation), p-val (Wilcoxon). W/L/T and p-values are the reference
// model's record against each row.
inline std::string format_text(const EvalReport& rep) {
  std::size_t w = 5;
  for (const auto& r : rep.rows) w = std::max(w, r.model.size());
  auto fmt = [](const char* f, auto... v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, v...);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "metric: " << to_string(rep.metric) << "  reference: " << rep.reference << "\n";
  os << fmt("%-*s", static_cast<int>(w), "Model") << fmt(" %13s %6s %8s %14s %7s %16s %7s %7s\n", "Avg. Rank",
                                                         "ELO", "Winrate", "rAUC", "CDelta", "Win/Lose/Tie",
                                                         "p-perm", "p-wilc");
  for (const auto& r : rep.rows) {
    os << fmt("%-*s", static_cast<int>(w), r.model.c_str());
    os << fmt(" %7.2f+-%4.1f", r.rank.mean, r.rank.sd);
    os << fmt(" %6.0f", r.elo);
    os << (rep.winrate_undefined ? fmt(" %8s", "n/a") : fmt(" %8.2f", r.winrate));
    os << fmt(" %7.3f+-%5.2f", r.rauc.mean, r.rauc.sd);
    os << (r.champion_delta_undefined ? fmt(" %7s", "n/a") : fmt(" %7.2f", r.champion_delta));
    if (r.wlt) {
      os << fmt(" %16s", fmt("%.2f/%.2f/%.2f", r.wlt->win, r.wlt->lose, r.wlt->tie).c_str());
      os << (r.permutation->undefined ? fmt(" %7s", "n/a") : fmt(" %7.2f", r.permutation->p));
      os << (r.wilcoxon->undefined ? fmt(" %7s", "n/a") : fmt(" %7.2f", r.wilcoxon->p));
    } else {
      os << fmt(" %16s %7s %7s", "--", "--", "--");
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace odsynth::eval
