#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/core/dataset.hpp"
#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/priors/ranges.hpp"

namespace odsynth::gmm {

// Sampling ranges for the Gaussian-mixture prior. The subspace fraction's
// lower bound is 1/d unless overridden.
struct GmmConfig {
  IntRange components{1, 5};
  IntRange dim{2, 100};
  RealRange mean{-5.0, 5.0};
  RealRange variance{0.0, 5.0};  // drawn on (lo, hi]
  RealRange affine{-1.0, 1.0};
  double subspace_fraction_lo = 0.0;  // 0 means 1/d
  double subspace_fraction_hi = 1.0;
  RealRange inflation{5.0, 10.0};
  RealRange contamination{0.02, 0.2};
  double quantile = 0.90;
  std::size_t n_ref = 100'000;
  std::size_t max_proposals = 10'000'000;

  void validate() const {
    require_range(components.within(1, 5), "gmm components within [1,5]");
    require_range(dim.within(2, 100), "gmm dim within [2,100]");
    require_range(mean.within(-5.0, 5.0), "gmm mean within [-5,5]");
    require_range(variance.within(0.0, 5.0) && variance.hi > 0.0, "gmm variance within (0,5]");
    require_range(affine.within(-1.0, 1.0), "gmm affine entries within [-1,1]");
    require_range(subspace_fraction_lo >= 0.0 && subspace_fraction_lo <= subspace_fraction_hi &&
                      subspace_fraction_hi <= 1.0,
                  "gmm subspace fraction within [1/d,1]");
    require_range(inflation.within(5.0, 10.0), "gmm inflation within [5,10]");
    require_range(contamination.within(0.02, 0.2), "gmm contamination within [0.02,0.2]");
    require_range(quantile > 0.0 && quantile < 1.0, "gmm quantile in (0,1)");
    require_range(n_ref >= 1000, "gmm n_ref >= 1000");
  }
};

// A diagonal-covariance mixture in pre-transform space together with the
// affine map x -> Wx + b applied to sampled points.
struct GmmSpec {
  std::vector<double> weights;
  Matrix means;      // m x d
  Matrix variances;  // m x d
  Matrix affine_w;   // d x d
  std::vector<double> affine_b;

  std::size_t components() const noexcept { return weights.size(); }
  std::size_t dim() const noexcept { return means.cols(); }

  // Standard mixture with identity transform; handy for analytic checks.
  static GmmSpec isotropic(std::size_t d, double variance = 1.0) {
    GmmSpec s;
    s.weights = {1.0};
    s.means = Matrix(1, d, 0.0);
    s.variances = Matrix(1, d, variance);
    s.affine_w = Matrix(d, d, 0.0);
    for (std::size_t j = 0; j < d; ++j) s.affine_w(j, j) = 1.0;
    s.affine_b.assign(d, 0.0);
    return s;
  }

  double component_log_density(std::size_t k, std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim(); ++j) {
      const double var = variances(k, j);
      const double diff = x[j] - means(k, j);
      acc += std::log(2.0 * std::numbers::pi * var) + diff * diff / var;
    }
    return -0.5 * acc;
  }

  double mahalanobis_sq(std::size_t k, std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim(); ++j) {
      const double diff = x[j] - means(k, j);
      acc += diff * diff / variances(k, j);
    }
    return acc;
  }

  // Negative log-likelihood of a pre-transform point under the mixture.
  double nll(std::span<const double> x) const {
    // Streaming log-sum-exp.
    double best = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t k = 0; k < components(); ++k) {
      if (weights[k] <= 0.0) continue;
      const double t = std::log(weights[k]) + component_log_density(k, x);
      if (t > best) {
        sum = sum * std::exp(best - t) + 1.0;
        best = t;
      } else {
        sum += std::exp(t - best);
      }
    }
    return -(best + std::log(sum));
  }

  std::size_t draw_component(Rng& rng) const { return sample_discrete(rng, weights); }

  void draw_from_component(Rng& rng, std::size_t k, std::span<double> out) const {
    for (std::size_t j = 0; j < dim(); ++j)
      out[j] = means(k, j) + std::sqrt(variances(k, j)) * standard_normal(rng);
  }

  void draw_pre_transform(Rng& rng, std::span<double> out) const { draw_from_component(rng, draw_component(rng), out); }

  void apply_affine(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i < dim(); ++i) {
      double acc = affine_b[i];
      for (std::size_t j = 0; j < dim(); ++j) acc += affine_w(i, j) * x[j];
      out[i] = acc;
    }
  }

  Matrix apply_affine(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) apply_affine(x.row(r), out.row(r));
    return out;
  }

  void validate() const {
    const std::size_t m = components(), d = dim();
    if (m == 0 || d == 0) throw ConfigError("gmm spec needs at least one component and dimension");
    if (means.rows() != m || variances.rows() != m || variances.cols() != d || affine_w.rows() != d ||
        affine_w.cols() != d || affine_b.size() != d)
      throw ConfigError("gmm spec shapes inconsistent");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("gmm weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("gmm weights must sum to 1");
    for (double v : variances.values())
      if (!(v > 0.0)) throw ConfigError("gmm variances must be strictly positive");
  }
};

inline nlohmann::json to_json(const GmmSpec& s) {
  return {{"components", s.components()}, {"dim", s.dim()}, {"weights", s.weights}};
}

// Draws every mixture parameter from the configured ranges.
inline GmmSpec sample_gmm_spec(const GmmConfig& cfg, const SeedPath& seed) {
  cfg.validate();
  Rng rng = seed.rng();
  const auto m = static_cast<std::size_t>(cfg.components.draw(rng));
  const auto d = static_cast<std::size_t>(cfg.dim.draw(rng));
  GmmSpec s;
  // Uniform on the simplex via normalized unit exponentials.
  s.weights.resize(m);
  double total = 0.0;
  for (auto& w : s.weights) {
    w = -std::log(uniform_open01(rng));
    total += w;
  }
  for (auto& w : s.weights) w /= total;
  if (m == 1) s.weights[0] = 1.0;

  s.means = Matrix(m, d);
  s.variances = Matrix(m, d);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      s.means(k, j) = cfg.mean.draw(rng);
      // (lo, hi]: mirror the half-open engine output.
      s.variances(k, j) = cfg.variance.hi - (cfg.variance.hi - cfg.variance.lo) * uniform01(rng);
    }
  }
  s.affine_w = Matrix(d, d);
  for (auto& v : s.affine_w.values()) v = cfg.affine.draw(rng);
  s.affine_b.resize(d);
  for (auto& v : s.affine_b) v = cfg.affine.draw(rng);
  return s;
}

// n transformed points; each from a weight-chosen component, then Wx + b.
inline Matrix sample_points(const GmmSpec& spec, std::size_t n, const SeedPath& seed) {
  Rng rng = seed.rng();
  Matrix out(n, spec.dim());
  std::vector<double> pre(spec.dim());
  for (std::size_t i = 0; i < n; ++i) {
    spec.draw_pre_transform(rng, pre);
    spec.apply_affine(pre, out.row(i));
  }
  return out;
}

// Linear-interpolated empirical quantile of an unsorted sample.
inline double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// Empirical q-quantile of the pre-transform mixture NLL over n_ref fresh draws.
inline double nll_threshold(const GmmSpec& spec, double q, std::size_t n_ref, const SeedPath& seed) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("nll_threshold: q must lie in (0,1)");
  if (n_ref < 1000) throw DomainError("nll_threshold: n_ref must be >= 1000");
  Rng rng = seed.rng();
  std::vector<double> nlls(n_ref);
  std::vector<double> x(spec.dim());
  for (auto& v : nlls) {
    spec.draw_pre_transform(rng, x);
    v = spec.nll(x);
  }
  return empirical_quantile(std::move(nlls), q);
}

struct SubspaceInflation {
  GmmSpec spec;
  std::size_t component = 0;
  std::vector<std::size_t> dims;
};

// Multiplies the variances of one uniformly chosen component by s on
// ceil(alpha * d) uniformly chosen dimensions.
inline SubspaceInflation inflate_subspace(const GmmSpec& spec, double alpha, double scale, const SeedPath& seed) {
  const double d = static_cast<double>(spec.dim());
  if (!(alpha >= 1.0 / d - 1e-12 && alpha <= 1.0)) throw DomainError("inflate_subspace: alpha outside [1/d,1]");
  if (!(scale > 0.0)) throw DomainError("inflate_subspace: scale must be positive");
  Rng rng = seed.rng();
  SubspaceInflation out{spec, 0, {}};
  out.component = uniform_index(rng, spec.components());
  const auto count = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(alpha * d - 1e-9)), 1, spec.dim());
  out.dims = sorted_sample_without_replacement(rng, spec.dim(), count);
  for (auto j : out.dims) out.spec.variances(out.component, j) *= scale;
  return out;
}

// Full record of one generated GMM dataset, including pre-transform points so
// label soundness can be checked.
struct GmmDraw {
  GmmSpec spec;
  SubspaceInflation inflation;
  double threshold = 0.0;
  double alpha = 0.0;
  double scale = 0.0;
  Matrix pre_inliers;
  Matrix pre_outliers;
};

namespace detail {

template <typename Accept>
Matrix rejection_sample(const GmmSpec& proposal, std::size_t count, std::size_t max_proposals, Rng& rng,
                        Accept&& accept) {
  Matrix out(count, proposal.dim());
  std::vector<double> x(proposal.dim());
  std::size_t accepted = 0, proposals = 0;
  while (accepted < count) {
    if (proposals >= max_proposals)
      throw GenerationStalled("gmm rejection sampling exceeded proposal cap");
    if (proposals >= 100'000 && static_cast<double>(accepted) / static_cast<double>(proposals) < 1e-4)
      throw GenerationStalled("gmm rejection sampling acceptance rate below 1e-4");
    proposal.draw_pre_transform(rng, x);
    ++proposals;
    if (accept(x)) {
      std::copy(x.begin(), x.end(), out.row(accepted).begin());
      ++accepted;
    }
  }
  return out;
}

}  // namespace detail

inline GmmDraw generate_gmm_draw(const GmmConfig& cfg, std::size_t n_in, std::size_t n_out, const SeedPath& seed) {
  if (n_in + n_out == 0) throw DomainError("generate_gmm_dataset: counts must not both be zero");
  GmmDraw draw;
  draw.spec = sample_gmm_spec(cfg, seed.child(0));
  const double d = static_cast<double>(draw.spec.dim());
  {
    Rng rng = seed.child(1).rng();
    const double lo = cfg.subspace_fraction_lo > 0.0 ? std::max(cfg.subspace_fraction_lo, 1.0 / d) : 1.0 / d;
    draw.alpha = uniform(rng, lo, std::max(lo, cfg.subspace_fraction_hi));
    draw.scale = cfg.inflation.draw(rng);
  }
  draw.threshold = nll_threshold(draw.spec, cfg.quantile, cfg.n_ref, seed.child(2));
  draw.inflation = inflate_subspace(draw.spec, draw.alpha, draw.scale, seed.child(3));

  const double thr = draw.threshold;
  Rng in_rng = seed.child(4).rng();
  draw.pre_inliers = detail::rejection_sample(draw.spec, n_in, cfg.max_proposals, in_rng,
                                              [&](std::span<const double> x) { return draw.spec.nll(x) <= thr; });
  Rng out_rng = seed.child(5).rng();
  draw.pre_outliers = detail::rejection_sample(draw.inflation.spec, n_out, cfg.max_proposals, out_rng,
                                               [&](std::span<const double> x) { return draw.spec.nll(x) > thr; });
  return draw;
}

inline LabeledDataset to_dataset(const GmmDraw& draw, const SeedPath& seed) {
  DatasetMeta meta;
  meta.prior = PriorKind::gmm;
  meta.archetype = Archetype::subspace;
  meta.seed = seed;
  meta.hyperparameters = {{"components", draw.spec.components()},
                          {"dim", draw.spec.dim()},
                          {"weights", draw.spec.weights},
                          {"subspace_fraction", draw.alpha},
                          {"inflation", draw.scale},
                          {"inflated_component", draw.inflation.component},
                          {"inflated_dims", draw.inflation.dims},
                          {"nll_threshold", draw.threshold}};
  return assemble_dataset(draw.spec.apply_affine(draw.pre_inliers), draw.spec.apply_affine(draw.pre_outliers),
                          std::move(meta), seed.child(6));
}

// Inliers: original-mixture draws with NLL <= threshold. Outliers: inflated
// mixture draws whose original-mixture NLL exceeds it. Affine map applied last.
inline LabeledDataset generate_gmm_dataset(const GmmConfig& cfg, std::size_t n_in, std::size_t n_out,
                                           const SeedPath& seed) {
  return to_dataset(generate_gmm_draw(cfg, n_in, n_out, seed), seed);
}

}  // namespace odsynth::gmm
