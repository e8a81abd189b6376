#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "odsynth/core/dataset.hpp"
#include "odsynth/core/error.hpp"
#include "odsynth/priors/copula.hpp"
#include "odsynth/priors/gmm.hpp"
#include "odsynth/priors/scm.hpp"

namespace odsynth {

// A generator arm: prior family plus the outlier archetype it injects.
struct PriorArm {
  PriorKind prior = PriorKind::gmm;
  Archetype archetype = Archetype::subspace;

  friend bool operator==(const PriorArm&, const PriorArm&) = default;
};

inline constexpr std::array<PriorArm, 5> kDefaultArms{{
    {PriorKind::gmm, Archetype::subspace},
    {PriorKind::scm, Archetype::measurement},
    {PriorKind::scm, Archetype::structural},
    {PriorKind::copula, Archetype::probabilistic},
    {PriorKind::copula, Archetype::dependence},
}};

inline std::string arm_name(const PriorArm& a) {
  return std::string(to_string(a.prior)) + "-" + std::string(to_string(a.archetype));
}

inline PriorArm parse_arm(std::string_view prior, std::string_view archetype) {
  PriorArm a;
  try {
    a.prior = parse_prior_kind(prior);
    if (!archetype.empty()) a.archetype = parse_archetype(archetype);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  if (archetype.empty()) {
    switch (a.prior) {
      case PriorKind::gmm: a.archetype = Archetype::subspace; break;
      case PriorKind::scm: a.archetype = Archetype::measurement; break;
      case PriorKind::copula: a.archetype = Archetype::probabilistic; break;
      case PriorKind::external: throw ConfigError("external data has no generator");
    }
    return a;
  }
  for (const auto& k : kDefaultArms)
    if (k == a) return a;
  throw ConfigError("archetype '" + std::string(archetype) + "' is not available for prior '" +
                    std::string(prior) + "'");
}

struct PriorConfigs {
  gmm::GmmConfig gmm;
  scm::ScmConfig scm;
  copula::CopulaConfig copula;

  void validate() const {
    gmm.validate();
    scm.validate();
    copula.validate();
  }

  RealRange contamination(PriorKind p) const {
    switch (p) {
      case PriorKind::gmm: return gmm.contamination;
      case PriorKind::scm: return scm.contamination;
      case PriorKind::copula: return copula.contamination;
      case PriorKind::external: break;
    }
    throw ConfigError("external data has no generator");
  }
};

// Outlier count giving rate r among n_in inliers; at least one when r > 0.
inline std::size_t outliers_for_rate(std::size_t n_in, double r) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("contamination must lie in [0,1)");
  if (r == 0.0) return 0;
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * r / (1.0 - r)));
  return std::max<std::size_t>(1, n);
}

// One dataset from an arm. A fixed dimension overrides the configured range.
inline LabeledDataset generate_dataset(const PriorConfigs& cfgs, const PriorArm& arm, std::size_t n_in,
                                       std::size_t n_out, const SeedPath& seed,
                                       std::optional<std::size_t> dim = std::nullopt) {
  const auto pin = [&](IntRange r) {
    if (!dim) return r;
    const auto v = static_cast<std::int64_t>(*dim);
    return IntRange{v, v};
  };
  switch (arm.prior) {
    case PriorKind::gmm: {
      auto c = cfgs.gmm;
      c.dim = pin(c.dim);
      return gmm::generate_gmm_dataset(c, n_in, n_out, seed);
    }
    case PriorKind::scm: {
      auto c = cfgs.scm;
      c.dim = pin(c.dim);
      return scm::generate_scm_dataset(c, arm.archetype, n_in, n_out, seed);
    }
    case PriorKind::copula: {
      auto c = cfgs.copula;
      c.dim = pin(c.dim);
      return copula::generate_copula_dataset(c, arm.archetype, n_in, n_out, seed);
    }
    case PriorKind::external: break;
  }
  throw ConfigError("external data has no generator");
}

// Draws the contamination rate from the arm's range (seed child 0) and
// generates with n_in inliers (child 1).
inline LabeledDataset generate_with_contamination(const PriorConfigs& cfgs, const PriorArm& arm, std::size_t n_in,
                                                  const SeedPath& seed,
                                                  std::optional<std::size_t> dim = std::nullopt) {
  Rng rng = seed.child(0).rng();
  const double r = cfgs.contamination(arm.prior).draw(rng);
  return generate_dataset(cfgs, arm, n_in, outliers_for_rate(n_in, r), seed.child(1), dim);
}

// Clean context of inliers plus a labeled query set.
struct Task {
  Matrix context;
  LabeledDataset query;
};

// Moves n_context uniformly chosen inliers into the context; everything else
// forms the query in original order.
inline Task split_context(const LabeledDataset& ds, std::size_t n_context, const SeedPath& seed) {
  std::vector<std::size_t> inlier_rows;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.labels()[i] == Label::inlier) inlier_rows.push_back(i);
  if (n_context == 0 || n_context >= inlier_rows.size())
    throw DomainError("split_context: need 1 <= n_context < number of inliers");
  Rng rng = seed.rng();
  std::vector<std::uint8_t> in_ctx(ds.size(), 0);
  for (auto k : sorted_sample_without_replacement(rng, inlier_rows.size(), n_context)) in_ctx[inlier_rows[k]] = 1;
  Matrix ctx, q;
  std::vector<Label> y;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (in_ctx[i]) {
      ctx.append_row(ds.features().row(i));
    } else {
      q.append_row(ds.features().row(i));
      y.push_back(ds.labels()[i]);
    }
  }
  return Task{std::move(ctx), LabeledDataset(std::move(q), std::move(y), ds.meta())};
}

}  // namespace odsynth
