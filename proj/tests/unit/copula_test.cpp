#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "odsynth/priors/copula.hpp"
#include "test_util.hpp"

using namespace odsynth;
using namespace odsynth::copula;
using odsynth::testing::kendall_tau;
using odsynth::testing::ks_critical;
using odsynth::testing::ks_statistic;
using odsynth::testing::ks_two_sample;

namespace {

CopulaSpec gaussian_pair(double rho) {
  CopulaSpec s;
  s.kind = CopulaKind::gaussian;
  s.correlation = Matrix::from_rows({{1.0, rho}, {rho, 1.0}});
  s.marginals.assign(2, MarginalSpec{});
  return s;
}

}  // namespace

TEST(CopulaMarginal, GaussianMedian) {
  EXPECT_NEAR(inverse_marginal(0.5, MarginalSpec{MarginalFamily::gaussian, 1.0, 1.0, 0.0, 1.0}), 0.0, 1e-12);
}

TEST(CopulaMarginal, ExponentialHandQuantile) {
  const MarginalSpec m{MarginalFamily::exponential, 1.0, 1.0, -5.0, 1.0};
  EXPECT_NEAR(inverse_marginal(1.0 - std::exp(-1.0), m), -4.0, 1e-12);
}

TEST(CopulaMarginal, UniformBetaHandQuantile) {
  const MarginalSpec m{MarginalFamily::beta, 1.0, 1.0, -5.0, 10.0};
  EXPECT_NEAR(inverse_marginal(0.25, m), -2.5, 1e-9);
}

TEST(CopulaMarginal, DomainChecked) {
  const MarginalSpec m;
  EXPECT_THROW(inverse_marginal(0.0, m), DomainError);
  EXPECT_THROW(inverse_marginal(1.0, m), DomainError);
  EXPECT_THROW(inverse_marginal(std::nan(""), m), DomainError);
}

TEST(CopulaMarginal, CdfInvertsQuantileForEveryFamily) {
  const CopulaConfig cfg;
  Rng rng = SeedPath(1).rng();
  for (auto f : kAllMarginals) {
    const auto m = sample_marginal(cfg, f, rng);
    for (double u : {0.01, 0.2, 0.5, 0.77, 0.99})
      EXPECT_NEAR(marginal_cdf(inverse_marginal(u, m), m), u, 1e-8) << to_string(f);
  }
}

TEST(CopulaSpec, DefaultFamilyPoolIsAllSix) {
  const CopulaConfig cfg;
  const std::set<MarginalFamily> pool(cfg.marginals.begin(), cfg.marginals.end());
  EXPECT_EQ(pool.size(), 6u);
  std::set<MarginalFamily> seen;
  for (std::uint64_t i = 0; i < 20; ++i)
    for (const auto& m : sample_copula_spec(cfg, 20, SeedPath(2, {i})).marginals) seen.insert(m.family);
  EXPECT_EQ(seen, pool);
}

TEST(CopulaSpec, DeterministicForSeed) {
  const CopulaConfig cfg;
  const auto a = sample_copula_spec(cfg, SeedPath(3));
  const auto b = sample_copula_spec(cfg, SeedPath(3));
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(a.correlation, b.correlation);
}

TEST(CopulaSpec, CorrelationPositiveDefiniteUnitDiagonal) {
  CopulaConfig cfg;
  cfg.gaussian_probability = 1.0;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const auto s = sample_copula_spec(cfg, SeedPath(4, {i}));
    ASSERT_EQ(s.kind, CopulaKind::gaussian);
    const auto& c = s.correlation;
    for (std::size_t a = 0; a < c.rows(); ++a) {
      ASSERT_EQ(c(a, a), 1.0);
      for (std::size_t b = 0; b < c.cols(); ++b) ASSERT_EQ(c(a, b), c(b, a));
    }
    for (auto j : s.independent)
      for (std::size_t b = 0; b < c.cols(); ++b)
        if (b != j) ASSERT_EQ(c(j, b), 0.0);
    ASSERT_GT(min_eigenvalue(c), 0.0);
  }
}

TEST(CopulaSpec, VineParametersInsideFamilyDomains) {
  CopulaConfig cfg;
  cfg.gaussian_probability = 0.0;
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto s = sample_copula_spec(cfg, SeedPath(5, {i}));
    ASSERT_EQ(s.kind, CopulaKind::vine);
    ASSERT_EQ(s.pairs.size() + 1, s.dim());
    for (const auto& p : s.pairs) {
      ASSERT_GE(p.tau, 0.1);
      ASSERT_LE(p.tau, 0.7);
      switch (p.family) {
        case PairFamily::gaussian:
        case PairFamily::student: ASSERT_LT(std::abs(p.param), 1.0); break;
        case PairFamily::clayton:
        case PairFamily::frank: ASSERT_GT(p.param, 0.0); break;
        case PairFamily::gumbel:
        case PairFamily::joe: ASSERT_GE(p.param, 1.0); break;
      }
    }
  }
}

TEST(CopulaSampling, IndependentUniformsAreUniform) {
  const auto spec = gaussian_pair(0.0);
  const std::size_t n = 10000;
  const auto u = sample_uniforms(spec, n, SeedPath(6));
  for (std::size_t j = 0; j < 2; ++j)
    EXPECT_LT(ks_statistic(u.column(j), [](double x) { return std::clamp(x, 0.0, 1.0); }), ks_critical(n));
  EXPECT_LT(std::abs(kendall_tau(u.column(0), u.column(1))), 0.03);
}

TEST(CopulaSampling, ComonotoneColumnsIdentical) {
  const auto u = sample_uniforms(gaussian_pair(1.0), 1000, SeedPath(7));
  for (std::size_t i = 0; i < u.rows(); ++i) EXPECT_NEAR(u(i, 0), u(i, 1), 1e-12);
}

TEST(CopulaSampling, GaussianKendallTau) {
  const std::size_t n = 50000;
  const auto u = sample_uniforms(gaussian_pair(0.8), n, SeedPath(8));
  const double expected = 2.0 / std::numbers::pi * std::asin(0.8);
  EXPECT_NEAR(kendall_tau(u.column(0), u.column(1)), expected, 0.01);
}

TEST(CopulaSampling, VinePairMatchesTargetTau) {
  for (auto f : kAllPairs) {
    CopulaSpec s;
    s.kind = CopulaKind::vine;
    s.order = {0, 1};
    PairCopula p;
    p.family = f;
    p.tau = 0.5;
    p.df = 5.0;
    p.param = param_from_tau(f, p.tau);
    s.pairs = {p};
    s.marginals.assign(2, MarginalSpec{});
    const auto u = sample_uniforms(s, 20000, SeedPath(9));
    EXPECT_NEAR(kendall_tau(u.column(0), u.column(1)), 0.5, 0.02) << to_string(f);
  }
}

TEST(CopulaSampling, HInverseInvertsH) {
  for (auto f : kAllPairs) {
    PairCopula p;
    p.family = f;
    p.tau = 0.4;
    p.df = 6.0;
    p.param = param_from_tau(f, p.tau);
    for (double v : {0.1, 0.5, 0.9})
      for (double w : {0.05, 0.3, 0.7, 0.95}) EXPECT_NEAR(h_function(p, h_inverse(p, w, v), v), w, 1e-8) << to_string(f);
  }
}

TEST(CopulaSampling, SklarMarginalsMatchFamilies) {
  CopulaConfig cfg;
  const std::size_t n = 10000;
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto spec = sample_copula_spec(cfg, 6, SeedPath(10, {i}));
    const auto x = apply_marginals(spec, sample_uniforms(spec, n, SeedPath(11, {i})));
    for (std::size_t j = 0; j < spec.dim(); ++j) {
      const auto& m = spec.marginals[j];
      EXPECT_LT(ks_statistic(x.column(j), [&](double v) { return marginal_cdf(v, m); }), ks_critical(n))
          << to_string(m.family);
    }
  }
}

TEST(CopulaOutliers, ProbabilisticValuesInBands) {
  Matrix u(500, 20, 0.5);
  CopulaOutlierConfig cfg;
  cfg.gamma_perturb = 0.2;
  const auto out = probabilistic_outliers(u, cfg, SeedPath(12));
  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::size_t changed = 0;
    for (std::size_t j = 0; j < out.cols(); ++j) {
      const double v = out(i, j);
      if (v == 0.5) continue;
      ++changed;
      EXPECT_TRUE((v >= 0.1 && v <= 0.3) || (v >= 0.7 && v <= 0.9)) << v;
    }
    EXPECT_EQ(changed, 4u);
  }
}

TEST(CopulaOutliers, SmallGammaStillPerturbsOneDimension) {
  Matrix u(100, 8, 0.5);
  CopulaOutlierConfig cfg;
  cfg.gamma_perturb = 0.05;
  const auto out = probabilistic_outliers(u, cfg, SeedPath(13));
  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::size_t changed = 0;
    for (std::size_t j = 0; j < out.cols(); ++j) changed += out(i, j) != 0.5;
    EXPECT_EQ(changed, 1u);
  }
}

TEST(CopulaOutliers, InverseCorrelationFlips) {
  Matrix u(50, 3, 0.3);
  CopulaOutlierConfig cfg;
  cfg.mode = DependenceMode::inverse_corr;
  const auto out = dependence_outliers(u, cfg, SeedPath(14));
  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::size_t flipped = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_TRUE(out(i, j) == 0.3 || std::abs(out(i, j) - 0.7) < 1e-15);
      flipped += out(i, j) != 0.3;
    }
    EXPECT_GE(flipped, 1u);
    EXPECT_LE(flipped, 3u);
  }
}

TEST(CopulaOutliers, InvcorrRangeWithinDimension) {
  for (std::size_t d = 1; d <= 100; ++d) {
    const auto [lo, hi] = invcorr_range(d);
    EXPECT_GE(lo, 1u);
    EXPECT_LE(lo, d);
    EXPECT_GT(hi, lo);
  }
}

TEST(CopulaOutliers, DependenceKeepsMarginals) {
  const std::size_t n = 10000;
  CopulaConfig cfg;
  const auto spec = sample_copula_spec(cfg, 5, SeedPath(15));
  const auto u = sample_uniforms(spec, n, SeedPath(16));
  for (auto mode : {DependenceMode::inverse_corr, DependenceMode::random_permutation}) {
    CopulaOutlierConfig ocfg;
    ocfg.mode = mode;
    const auto out = dependence_outliers(u, ocfg, SeedPath(17));
    for (std::size_t j = 0; j < spec.dim(); ++j)
      EXPECT_LT(ks_statistic(out.column(j), [](double x) { return std::clamp(x, 0.0, 1.0); }), ks_critical(n))
          << to_string(mode) << " column " << j;
  }
}

TEST(CopulaOutliers, ProbabilisticTouchesOnlyPerturbedDims) {
  const std::size_t n = 2000;
  const auto spec = sample_copula_spec(CopulaConfig{}, 10, SeedPath(18));
  const auto u = sample_uniforms(spec, n, SeedPath(19));
  CopulaOutlierConfig ocfg;
  ocfg.gamma_perturb = 0.2;
  const auto out = probabilistic_outliers(u, ocfg, SeedPath(20));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t changed = 0;
    for (std::size_t j = 0; j < 10; ++j) changed += out(i, j) != u(i, j);
    EXPECT_LE(changed, 2u);
  }
}

TEST(CopulaDataset, NoOutliersAndDeterminism) {
  const CopulaConfig cfg;
  const auto ds = generate_copula_dataset(cfg, Archetype::dependence, 100, 0, SeedPath(21));
  EXPECT_EQ(ds.n_outliers(), 0u);
  EXPECT_EQ(generate_copula_dataset(cfg, Archetype::probabilistic, 100, 10, SeedPath(22)),
            generate_copula_dataset(cfg, Archetype::probabilistic, 100, 10, SeedPath(22)));
}
