#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "odsynth/core/error.hpp"
#include "odsynth/curriculum/category.hpp"
#include "odsynth/curriculum/sec.hpp"
#include "odsynth/detectors/ensemble.hpp"
#include "odsynth/detectors/reference_learner.hpp"
#include "odsynth/eval/report.hpp"
#include "odsynth/priors/registry.hpp"

namespace odsynth::config {

struct RunSettings {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::size_t jobs = 1;
};

struct GenerateSettings {
  std::size_t count = 10;
  std::size_t n_inliers = 1000;
};

struct CurriculumSettings {
  std::size_t epochs = 200;
  std::size_t checkpoint_every = 10;
  double tau = 0.5;
  double gamma = 0.1;
  std::vector<curriculum::DimBin> bins = curriculum::default_bins();
  std::vector<PriorArm> arms{kDefaultArms.begin(), kDefaultArms.end()};
  curriculum::SecConfig sec;
  std::size_t n_inliers = 300;
  std::size_t context_size = 150;
  detectors::ReferenceLearnerConfig learner;
  std::size_t holdout_per_arm = 10;
};

struct DetectSettings {
  std::size_t context_size = 0;  // 0: all inliers of the first half
  bool ensemble = false;
};

struct DedupSettings {
  double tolerance = 1e-9;
};

// Whole-run configuration, one text file of `key = value` lines grouped under
// `[section]` headers. `#` starts a comment. Ranges are written `lo, hi`;
// lists are comma separated.
struct RunConfig {
  RunSettings run;
  GenerateSettings generate;
  PriorConfigs priors;
  CurriculumSettings curriculum;
  detectors::EnsembleConfig ensemble;
  DetectSettings detect;
  eval::EvalOptions evaluate;
  DedupSettings dedup;

  void validate() const {
    priors.validate();
    if (run.jobs == 0) throw ConfigError("run.jobs must be >= 1");
    if (generate.count == 0 || generate.n_inliers < 2) throw ConfigError("generate.count >= 1 and n_inliers >= 2");
    const auto& c = curriculum;
    if (c.epochs == 0) throw ConfigError("curriculum.epochs must be >= 1");
    if (c.checkpoint_every == 0) throw ConfigError("curriculum.checkpoint_every must be >= 1");
    if (c.sec.batch_budget == 0) throw ConfigError("curriculum.batch_budget must be >= 1");
    if (c.context_size == 0 || c.context_size >= c.n_inliers)
      throw ConfigError("curriculum.context_size must lie in [1, n_inliers)");
    c.sec.pace.validate();
    (void)curriculum::CategoryState::make(c.arms, c.bins, c.tau, c.gamma, c.epochs);
    for (const auto& b : c.bins)
      if (b.lo < 2 || b.hi > 101) throw ConfigError("curriculum bins must lie within [2,101)");
    if (c.learner.input_dim == 0 || c.learner.hidden == 0 || !(c.learner.learning_rate > 0.0))
      throw ConfigError("curriculum learner sizes and rate must be positive");
    if (ensemble.n_members == 0 || ensemble.context_cap == 0 || ensemble.dim_cap == 0)
      throw ConfigError("ensemble sizes must be >= 1");
    evaluate.elo.validate();
    if (evaluate.n_resamples == 0) throw ConfigError("evaluate.n_resamples must be >= 1");
    if (!(dedup.tolerance >= 0.0)) throw ConfigError("dedup.tolerance must be >= 0");
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto ns = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), ns));
  s.erase(std::find_if(s.rbegin(), s.rend(), ns).base(), s.end());
  return s;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
  const auto x = to_int(key, v);
  if (x < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(x);
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  if (v.empty() || v[0] == '-') throw ConfigError(key + ": expected an unsigned integer");
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline RealRange to_real_range(const std::string& key, const std::string& v) {
  const auto p = split_list(v);
  if (p.size() != 2) throw ConfigError(key + ": expected 'lo, hi'");
  RealRange r{to_real(key, p[0]), to_real(key, p[1])};
  if (r.lo > r.hi) throw ConfigError(key + ": lo exceeds hi");
  return r;
}

inline IntRange to_int_range(const std::string& key, const std::string& v) {
  const auto p = split_list(v);
  if (p.size() != 2) throw ConfigError(key + ": expected 'lo, hi'");
  IntRange r{to_int(key, p[0]), to_int(key, p[1])};
  if (r.lo > r.hi) throw ConfigError(key + ": lo exceeds hi");
  return r;
}

template <class E, class All>
std::vector<E> to_enum_list(const std::string& key, const std::string& v, const All& all) {
  std::vector<E> out;
  for (const auto& item : split_list(v)) {
    bool found = false;
    for (E e : all)
      if (to_string(e) == item) {
        out.push_back(e);
        found = true;
      }
    if (!found) throw ConfigError(key + ": unknown value '" + item + "'");
  }
  if (out.empty()) throw ConfigError(key + ": list must not be empty");
  return out;
}

}  // namespace detail

// Applies one `section.key = value` assignment.
inline void apply_setting(RunConfig& c, const std::string& section, const std::string& key, const std::string& v) {
  using namespace detail;
  const std::string k = section + "." + key;
  using Setter = std::function<void()>;
  auto& g = c.priors.gmm;
  auto& s = c.priors.scm;
  auto& cp = c.priors.copula;
  auto& cu = c.curriculum;
  auto& ev = c.evaluate;
  const std::map<std::string, Setter> table = {
      {"run.seed", [&] { c.run.seed = to_u64(k, v); }},
      {"run.out", [&] { c.run.out = v; }},
      {"run.jobs", [&] { c.run.jobs = to_count(k, v); }},
      {"generate.count", [&] { c.generate.count = to_count(k, v); }},
      {"generate.n_inliers", [&] { c.generate.n_inliers = to_count(k, v); }},
      {"gmm.components", [&] { g.components = to_int_range(k, v); }},
      {"gmm.dim", [&] { g.dim = to_int_range(k, v); }},
      {"gmm.mean", [&] { g.mean = to_real_range(k, v); }},
      {"gmm.variance", [&] { g.variance = to_real_range(k, v); }},
      {"gmm.affine", [&] { g.affine = to_real_range(k, v); }},
      {"gmm.inflation", [&] { g.inflation = to_real_range(k, v); }},
      {"gmm.contamination", [&] { g.contamination = to_real_range(k, v); }},
      {"gmm.quantile", [&] { g.quantile = to_real(k, v); }},
      {"gmm.n_ref", [&] { g.n_ref = to_count(k, v); }},
      {"scm.depth", [&] { s.depth = to_int_range(k, v); }},
      {"scm.width", [&] { s.width = to_int_range(k, v); }},
      {"scm.drop_rate", [&] { s.drop_rate = to_real_range(k, v); }},
      {"scm.dim", [&] { s.dim = to_int_range(k, v); }},
      {"scm.activations",
       [&] {
         s.activations = to_enum_list<scm::Activation>(
             k, v, std::vector{scm::Activation::relu, scm::Activation::tanh, scm::Activation::sigmoid, scm::Activation::identity});
       }},
      {"scm.inflation", [&] { s.inflation = to_real_range(k, v); }},
      {"scm.p_break", [&] { s.p_break = to_real(k, v); }},
      {"scm.p_flip", [&] { s.p_flip = to_real(k, v); }},
      {"scm.contamination", [&] { s.contamination = to_real_range(k, v); }},
      {"scm.allow_noise_only", [&] { s.allow_noise_only = to_bool(k, v); }},
      {"copula.dim", [&] { cp.dim = to_int_range(k, v); }},
      {"copula.gaussian_probability", [&] { cp.gaussian_probability = to_real(k, v); }},
      {"copula.alpha_indp", [&] { cp.alpha_indp = to_real_range(k, v); }},
      {"copula.marginals", [&] { cp.marginals = to_enum_list<copula::MarginalFamily>(k, v, copula::kAllMarginals); }},
      {"copula.pair_families", [&] { cp.pair_families = to_enum_list<copula::PairFamily>(k, v, copula::kAllPairs); }},
      {"copula.kendall_tau", [&] { cp.kendall_tau = to_real_range(k, v); }},
      {"copula.loading_jitter", [&] { cp.loading_jitter = to_real(k, v); }},
      {"copula.gamma_perturb", [&] { cp.gamma_perturb = to_real_range(k, v); }},
      {"copula.u_small", [&] { cp.u_small = to_real_range(k, v); }},
      {"copula.u_large", [&] { cp.u_large = to_real_range(k, v); }},
      {"copula.dependence_modes",
       [&] {
         cp.dependence_modes = to_enum_list<copula::DependenceMode>(
             k, v, std::vector{copula::DependenceMode::inverse_corr, copula::DependenceMode::random_permutation});
       }},
      {"copula.contamination", [&] { cp.contamination = to_real_range(k, v); }},
      {"curriculum.epochs", [&] { cu.epochs = to_count(k, v); }},
      {"curriculum.checkpoint_every", [&] { cu.checkpoint_every = to_count(k, v); }},
      {"curriculum.tau", [&] { cu.tau = to_real(k, v); }},
      {"curriculum.gamma", [&] { cu.gamma = to_real(k, v); }},
      {"curriculum.bins",
       [&] {
         cu.bins.clear();
         const auto p = split_list(v);
         if (p.size() % 2 != 0 || p.empty()) throw ConfigError(k + ": expected lo, hi pairs");
         for (std::size_t i = 0; i < p.size(); i += 2) cu.bins.push_back({to_count(k, p[i]), to_count(k, p[i + 1])});
       }},
      {"curriculum.arms",
       [&] {
         cu.arms.clear();
         for (const auto& item : split_list(v)) {
           const auto dash = item.find('-');
           cu.arms.push_back(dash == std::string::npos ? parse_arm(item, "")
                                                       : parse_arm(item.substr(0, dash), item.substr(dash + 1)));
         }
       }},
      {"curriculum.policy", [&] { cu.sec.policy = curriculum::parse_policy(v); }},
      {"curriculum.reward", [&] { cu.sec.reward = curriculum::parse_reward_kind(v); }},
      {"curriculum.batch_budget", [&] { cu.sec.batch_budget = to_count(k, v); }},
      {"curriculum.pace", [&] { cu.sec.pace.family = curriculum::parse_pace_family(v); }},
      {"curriculum.pace_a", [&] { cu.sec.pace.a = to_real(k, v); }},
      {"curriculum.pace_b", [&] { cu.sec.pace.b = to_real(k, v); }},
      {"curriculum.pace_cap", [&] { cu.sec.pace.cap = to_real(k, v); }},
      {"curriculum.n_inliers", [&] { cu.n_inliers = to_count(k, v); }},
      {"curriculum.context_size", [&] { cu.context_size = to_count(k, v); }},
      {"curriculum.learner_input_dim", [&] { cu.learner.input_dim = to_count(k, v); }},
      {"curriculum.learner_hidden", [&] { cu.learner.hidden = to_count(k, v); }},
      {"curriculum.learner_lr", [&] { cu.learner.learning_rate = to_real(k, v); }},
      {"curriculum.holdout_per_arm", [&] { cu.holdout_per_arm = to_count(k, v); }},
      {"ensemble.members", [&] { c.ensemble.n_members = to_count(k, v); }},
      {"ensemble.context_cap", [&] { c.ensemble.context_cap = to_count(k, v); }},
      {"ensemble.dim_cap", [&] { c.ensemble.dim_cap = to_count(k, v); }},
      {"detect.context_size", [&] { c.detect.context_size = to_count(k, v); }},
      {"detect.ensemble", [&] { c.detect.ensemble = to_bool(k, v); }},
      {"evaluate.elo_r0", [&] { ev.elo.r0 = to_real(k, v); }},
      {"evaluate.elo_k", [&] { ev.elo.k = to_real(k, v); }},
      {"evaluate.elo_tie_eps", [&] { ev.elo.tie_eps = to_real(k, v); }},
      {"evaluate.elo_order", [&] { ev.elo.order = eval::parse_elo_order(v); }},
      {"evaluate.elo_shuffles", [&] { ev.elo.shuffles = to_count(k, v); }},
      {"evaluate.rauc_mode", [&] { ev.rauc_mode = eval::parse_rauc_mode(v); }},
      {"evaluate.champion_delta_mode", [&] { ev.cd_mode = eval::parse_champion_delta_mode(v); }},
      {"evaluate.n_resamples", [&] { ev.n_resamples = to_count(k, v); }},
      {"evaluate.reference", [&] { ev.reference = v; }},
      {"dedup.tolerance", [&] { c.dedup.tolerance = to_real(k, v); }},
  };
  auto it = table.find(k);
  if (it == table.end()) throw ConfigError("unknown config key '" + k + "'");
  it->second();
}

inline RunConfig parse_run_config(std::istream& is) {
  RunConfig c;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a [section]");
    try {
      apply_setting(c, section, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw ConfigError("cannot open config file " + p.string());
  return parse_run_config(is);
}

}  // namespace odsynth::config
