#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/core/error.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/curriculum/category.hpp"
#include "odsynth/curriculum/learner.hpp"
#include "odsynth/detectors/ensemble.hpp"
#include "odsynth/priors/registry.hpp"

namespace odsynth::curriculum {

// sec: softmax sampling, variance reward, EMA, pace filter.
// naive: uniform sampling, no reward, no filter.
// spl: uniform sampling, pace filter on losses.
// anti: softmax sampling on EMA of mean loss magnitude, no filter.
enum class Policy { sec, naive, spl, anti };
enum class RewardKind { variance, binary };

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::sec: return "sec";
    case Policy::naive: return "naive";
    case Policy::spl: return "spl";
    case Policy::anti: return "anti";
  }
  return "sec";
}

inline Policy parse_policy(std::string_view s) {
  for (auto p : {Policy::sec, Policy::naive, Policy::spl, Policy::anti})
    if (to_string(p) == s) return p;
  throw ConfigError("unknown curriculum policy '" + std::string(s) + "'");
}

inline RewardKind parse_reward_kind(std::string_view s) {
  if (s == "variance") return RewardKind::variance;
  if (s == "binary") return RewardKind::binary;
  throw ConfigError("unknown reward kind '" + std::string(s) + "'");
}

inline std::string_view to_string(RewardKind r) { return r == RewardKind::variance ? "variance" : "binary"; }

struct SecConfig {
  std::size_t batch_budget = 2000;
  Policy policy = Policy::sec;
  RewardKind reward = RewardKind::variance;
  PaceConfig pace;
  std::size_t jobs = 1;
};

// Produces one training task for (arm, dimension, seed).
using TaskSource = std::function<Task(const PriorArm&, std::size_t, const SeedPath&)>;

// Default source: n_inliers inliers at the prior's contamination, a clean
// context of context_size inliers, the rest as query points.
inline TaskSource synthetic_task_source(PriorConfigs cfgs, std::size_t n_inliers, std::size_t context_size) {
  return [cfgs = std::move(cfgs), n_inliers, context_size](const PriorArm& arm, std::size_t d, const SeedPath& seed) {
    const auto ds = generate_with_contamination(cfgs, arm, n_inliers, seed.child(0), d);
    return split_context(ds, context_size, seed.child(1));
  };
}

struct CategoryReport {
  std::string name;
  bool sampled = false;
  double reward = 0.0;
  double weight = 0.0;
  std::size_t datasets = 0;
  std::size_t points = 0;
};

struct EpochReport {
  std::size_t t = 0;
  std::size_t points = 0;
  std::size_t kept = 0;
  double mean_loss = 0.0;
  std::vector<CategoryReport> categories;

  double kept_fraction() const { return points ? static_cast<double>(kept) / static_cast<double>(points) : 0.0; }
};

inline nlohmann::json to_json(const EpochReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& c : r.categories) {
    cats[c.name] = {{"reward", c.sampled ? nlohmann::json(c.reward) : nlohmann::json(nullptr)},
                    {"weight", c.weight},
                    {"datasets_sampled", c.datasets},
                    {"points", c.points}};
  }
  return {{"t", r.t},
          {"points", r.points},
          {"kept_fraction", r.kept_fraction()},
          {"mean_loss", r.mean_loss},
          {"categories", cats}};
}

// Fills the epoch batch: categories are drawn sequentially (slot k uses
// seed.child(0, k)); tasks are generated in parallel from seed.child(1, k).
// The dataset that crosses the budget has its query truncated to a random
// subset of the remaining room.
inline Batch fill_batch(const CategoryState& state, const SecConfig& cfg, const TaskSource& source,
                        const SeedPath& seed) {
  Batch batch;
  std::size_t total = 0;
  std::size_t slot = 0;
  const bool uniform = cfg.policy == Policy::naive || cfg.policy == Policy::spl;
  // Draw in waves so generation can run in parallel while the stopping rule
  // stays a function of the slot sequence alone.
  while (total < cfg.batch_budget) {
    const std::size_t wave = std::max<std::size_t>(1, cfg.jobs);
    std::vector<CategoryDraw> draws(wave);
    for (std::size_t w = 0; w < wave; ++w) {
      Rng rng = seed.child(0, slot + w).rng();
      draws[w] = uniform ? sample_category_uniform(state, rng) : sample_category(state, rng);
    }
    std::vector<Task> tasks(wave, Task{Matrix(), LabeledDataset(Matrix(1, 1), {Label::inlier}, {})});
    detectors::parallel_for(wave, cfg.jobs, [&](std::size_t w) {
      const auto& d = draws[w];
      try {
        tasks[w] = source(state.arms[state.arm_of(d.category)], d.dim, seed.child(1, slot + w));
      } catch (const Error& e) {
        throw GenerationStalled("category " + state.name(d.category) + ": " + e.what());
      }
    });
    for (std::size_t w = 0; w < wave && total < cfg.batch_budget; ++w) {
      BatchItem item{draws[w].category, std::move(tasks[w]), seed.child(1, slot + w)};
      const std::size_t room = cfg.batch_budget - total;
      if (item.task.query.size() > room) {
        Rng rng = seed.child(2, slot + w).rng();
        const auto rows = sorted_sample_without_replacement(rng, item.task.query.size(), room);
        const auto& q = item.task.query;
        std::vector<Label> y;
        for (auto r : rows) y.push_back(q.labels()[r]);
        item.task.query = LabeledDataset(q.features().select_rows(rows), std::move(y), q.meta());
      }
      total += item.task.query.size();
      batch.add(std::move(item));
    }
    slot += wave;
  }
  return batch;
}

// One pass of the curriculum loop: fill, score, reward, update weights, pace
// filter, one learner update. Advances state.t.
inline EpochReport run_sec_epoch(CategoryState& state, LearnerHandle& learner, const SecConfig& cfg,
                                 const TaskSource& source, const SeedPath& seed) {
  if (cfg.batch_budget == 0) throw ConfigError("batch budget must be positive");
  const Batch batch = fill_batch(state, cfg, source, seed);
  const auto losses = learner.losses(batch);
  const std::size_t n = batch.points();

  std::map<std::size_t, std::vector<double>> per_cat;
  for (std::size_t p = 0; p < n; ++p) per_cat[batch.category(p)].push_back(losses[p]);

  std::map<std::size_t, double> rewards;
  for (const auto& [c, ls] : per_cat) {
    double r = 0.0;
    if (cfg.policy == Policy::anti) {
      for (double l : ls) r += l;
      r /= static_cast<double>(ls.size());
    } else if (cfg.reward == RewardKind::binary) {
      std::vector<int> correct;
      for (double l : ls) correct.push_back(l < std::numbers::ln2 ? 1 : 0);
      r = binary_category_reward(correct);
    } else {
      r = category_reward(ls);
    }
    rewards[c] = r;
  }
  if (cfg.policy == Policy::sec || cfg.policy == Policy::anti) ema_update(state, rewards, state.gamma);

  const std::size_t step = std::min(state.t + 1, state.total_epochs);
  const bool filter = cfg.policy == Policy::sec || cfg.policy == Policy::spl;
  const std::size_t keep = filter ? pace(cfg.pace, n, step, state.total_epochs) : n;
  const auto kept = filter_by_loss(losses, keep);
  learner.update(batch, kept, seed.child(3));

  EpochReport rep;
  rep.t = state.t + 1;
  rep.points = n;
  rep.kept = kept.size();
  double total = 0.0;
  for (double l : losses) total += l;
  rep.mean_loss = n ? total / static_cast<double>(n) : 0.0;
  rep.categories.resize(state.size());
  for (std::size_t c = 0; c < state.size(); ++c) {
    rep.categories[c].name = state.name(c);
    rep.categories[c].weight = state.weights[c];
  }
  for (const auto& it : batch.items) {
    rep.categories[it.category].datasets += 1;
    rep.categories[it.category].points += it.task.query.size();
  }
  for (const auto& [c, r] : rewards) {
    rep.categories[c].sampled = true;
    rep.categories[c].reward = r;
  }
  state.t += 1;
  return rep;
}

}  // namespace odsynth::curriculum
