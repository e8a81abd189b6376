#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/core/error.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/priors/registry.hpp"

namespace odsynth::curriculum {

// Half-open dimension bin [lo, hi).
struct DimBin {
  std::size_t lo = 2;
  std::size_t hi = 21;

  friend bool operator==(const DimBin&, const DimBin&) = default;
};

inline std::vector<DimBin> default_bins() { return {{2, 21}, {21, 40}, {40, 59}, {59, 78}, {78, 101}}; }

// Bandit over (dimension bin x prior arm). Category index = bin * P + arm.
struct CategoryState {
  std::vector<PriorArm> arms;
  std::vector<DimBin> bins;
  std::vector<double> weights;
  double tau = 0.5;
  double gamma = 0.1;
  std::size_t t = 0;
  std::size_t total_epochs = 1;

  static CategoryState make(std::vector<PriorArm> arms, std::vector<DimBin> bins, double tau, double gamma,
                            std::size_t total_epochs) {
    CategoryState s;
    s.arms = std::move(arms);
    s.bins = std::move(bins);
    s.tau = tau;
    s.gamma = gamma;
    s.total_epochs = total_epochs;
    s.validate_layout();
    const double n = static_cast<double>(s.arms.size() * s.bins.size());
    s.weights.assign(s.arms.size() * s.bins.size(), 1.0 / n);
    return s;
  }

  static CategoryState make_default(std::size_t total_epochs) {
    return make({kDefaultArms.begin(), kDefaultArms.end()}, default_bins(), 0.5, 0.1, total_epochs);
  }

  std::size_t size() const noexcept { return weights.size(); }
  std::size_t arm_of(std::size_t c) const { return c % arms.size(); }
  std::size_t bin_of(std::size_t c) const { return c / arms.size(); }

  std::string name(std::size_t c) const {
    const auto& b = bins[bin_of(c)];
    return arm_name(arms[arm_of(c)]) + "@[" + std::to_string(b.lo) + "," + std::to_string(b.hi) + ")";
  }

  void validate_layout() const {
    if (arms.empty() || bins.empty()) throw ConfigError("curriculum needs at least one arm and one bin");
    if (!(tau > 0.0)) throw ConfigError("curriculum temperature must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("curriculum gamma must lie in (0,1]");
    auto sorted = bins;
    std::sort(sorted.begin(), sorted.end(), [](const DimBin& a, const DimBin& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i].lo >= sorted[i].hi) throw ConfigError("dimension bins must be non-empty");
      if (i > 0 && sorted[i].lo < sorted[i - 1].hi) throw ConfigError("dimension bins must be disjoint");
    }
  }

  friend bool operator==(const CategoryState&, const CategoryState&) = default;
};

// softmax(Q / tau) with max-subtraction.
inline std::vector<double> category_probabilities(const CategoryState& s) {
  if (s.weights.empty()) throw DomainError("category_probabilities: no categories");
  for (double w : s.weights)
    if (!std::isfinite(w)) throw DomainError("category weights must be finite");
  const double m = *std::max_element(s.weights.begin(), s.weights.end());
  std::vector<double> p(s.weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((s.weights[i] - m) / s.tau);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

struct CategoryDraw {
  std::size_t category = 0;
  std::size_t dim = 0;
};

inline CategoryDraw sample_category(const CategoryState& s, Rng& rng) {
  const auto p = category_probabilities(s);
  CategoryDraw out;
  out.category = sample_discrete(rng, p);
  const auto& b = s.bins[s.bin_of(out.category)];
  out.dim = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(b.lo), static_cast<std::int64_t>(b.hi) - 1));
  return out;
}

inline CategoryDraw sample_category_uniform(const CategoryState& s, Rng& rng) {
  CategoryDraw out;
  out.category = uniform_index(rng, s.size());
  const auto& b = s.bins[s.bin_of(out.category)];
  out.dim = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(b.lo), static_cast<std::int64_t>(b.hi) - 1));
  return out;
}

// Population variance of the losses (mean squared centered loss).
inline double category_reward(std::span<const double> losses) {
  if (losses.empty()) throw DomainError("category_reward: empty loss list");
  const double n = static_cast<double>(losses.size());
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= n;
  double acc = 0.0;
  for (double l : losses) acc += (l - mean) * (l - mean);
  return acc / n;
}

// Sum of absolute deviations of 0/1 correctness flags from their mean.
inline double binary_category_reward(std::span<const int> correct) {
  if (correct.empty()) throw DomainError("binary_category_reward: empty input");
  double mean = 0.0;
  for (int c : correct) mean += c;
  mean /= static_cast<double>(correct.size());
  double acc = 0.0;
  for (int c : correct) acc += std::abs(static_cast<double>(c) - mean);
  return acc;
}

// Q <- gamma r + (1 - gamma) Q for categories present in `rewards` only.
inline void ema_update(CategoryState& s, const std::map<std::size_t, double>& rewards, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("ema_update: gamma must lie in (0,1]");
  for (const auto& [c, r] : rewards) {
    if (c >= s.size()) throw DomainError("ema_update: category out of range");
    s.weights[c] = gamma == 1.0 ? r : gamma * r + (1.0 - gamma) * s.weights[c];
  }
}

enum class PaceFamily { log, exp, step, linear, root, quadratic };

inline constexpr PaceFamily kAllPaceFamilies[] = {PaceFamily::log,    PaceFamily::exp,  PaceFamily::step,
                                                  PaceFamily::linear, PaceFamily::root, PaceFamily::quadratic};

inline std::string_view to_string(PaceFamily f) {
  switch (f) {
    case PaceFamily::log: return "log";
    case PaceFamily::exp: return "exp";
    case PaceFamily::step: return "step";
    case PaceFamily::linear: return "linear";
    case PaceFamily::root: return "root";
    case PaceFamily::quadratic: return "quadratic";
  }
  return "linear";
}

inline PaceFamily parse_pace_family(std::string_view s) {
  for (auto f : kAllPaceFamilies)
    if (to_string(f) == s) return f;
  throw ConfigError("unknown pacing function '" + std::string(s) + "'");
}

struct PaceConfig {
  PaceFamily family = PaceFamily::linear;
  double a = 0.8;
  double b = 0.2;
  double cap = 0.95;

  void validate() const {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("pace a must lie in (0,1]");
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("pace b must lie in [0,1]");
    if (!(cap > 0.0 && cap <= 1.0)) throw ConfigError("pace cap must lie in (0,1]");
  }
};

// g_(a,b)(t) before clamping.
inline double pace_raw(const PaceConfig& cfg, double n, double t, double total) {
  const double a = cfg.a, b = cfg.b;
  const double at = a * total;
  const double x = t / at;
  switch (cfg.family) {
    case PaceFamily::log: return n * b + n * (1.0 - b) * (1.0 + 0.1 * std::log(x + std::exp(-10.0)));
    case PaceFamily::exp: return n * b + n * (1.0 - b) / (std::exp(10.0) - 1.0) * (std::exp(10.0 * x) - 1.0);
    case PaceFamily::step: return n * b + n * std::ceil(x * (1.0 - b));
    case PaceFamily::linear: return n * b + n * (1.0 - b) * x;
    case PaceFamily::root: return n * b + n * (1.0 - b) * std::sqrt(t) / std::sqrt(at);
    case PaceFamily::quadratic: return n * b + n * (1.0 - b) * x * x;
  }
  return n;
}

// Keep count: g(t) clamped to [ceil((1 - cap) N), N] and rounded.
inline std::size_t pace(const PaceConfig& cfg, std::size_t n, std::size_t t, std::size_t total) {
  cfg.validate();
  if (total == 0 || t > total) throw DomainError("pace: need 0 <= t <= T and T >= 1");
  const double nn = static_cast<double>(n);
  const double floor_keep = std::ceil((1.0 - cfg.cap) * nn - 1e-9);
  const double g = pace_raw(cfg, nn, static_cast<double>(t), static_cast<double>(total));
  const double clamped = std::clamp(g, floor_keep, nn);
  return static_cast<std::size_t>(std::llround(clamped));
}

// Indices of the `keep` smallest losses, ascending by loss; ties by index.
inline std::vector<std::size_t> filter_by_loss(std::span<const double> losses, std::size_t keep) {
  if (keep > losses.size()) throw DomainError("filter_by_loss: keep exceeds batch size");
  std::vector<std::size_t> idx(losses.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  idx.resize(keep);
  return idx;
}

inline nlohmann::json to_json(const CategoryState& s) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : s.arms) arms.push_back({{"prior", to_string(a.prior)}, {"archetype", to_string(a.archetype)}});
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : s.bins) bins.push_back({b.lo, b.hi});
  return {{"arms", arms}, {"bins", bins},   {"weights", s.weights},         {"tau", s.tau},
          {"gamma", s.gamma}, {"t", s.t}, {"total_epochs", s.total_epochs}};
}

inline CategoryState category_state_from_json(const nlohmann::json& j) {
  try {
    CategoryState s;
    for (const auto& a : j.at("arms"))
      s.arms.push_back(parse_arm(a.at("prior").get<std::string>(), a.at("archetype").get<std::string>()));
    for (const auto& b : j.at("bins")) s.bins.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>()});
    s.weights = j.at("weights").get<std::vector<double>>();
    s.tau = j.at("tau").get<double>();
    s.gamma = j.at("gamma").get<double>();
    s.t = j.at("t").get<std::size_t>();
    s.total_epochs = j.at("total_epochs").get<std::size_t>();
    s.validate_layout();
    if (s.weights.size() != s.arms.size() * s.bins.size()) throw DataError("category weight count mismatch");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed curriculum state: ") + e.what());
  }
}

}  // namespace odsynth::curriculum
