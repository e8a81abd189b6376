#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "odsynth/priors/gmm.hpp"
#include "test_util.hpp"

using namespace odsynth;
using namespace odsynth::gmm;
using odsynth::testing::mean;
using odsynth::testing::variance;

TEST(GmmSpec, PinnedRangesGiveOneComponentIn2d) {
  GmmConfig cfg;
  cfg.components = {1, 1};
  cfg.dim = {2, 2};
  const auto s = sample_gmm_spec(cfg, SeedPath(1));
  EXPECT_EQ(s.components(), 1u);
  EXPECT_EQ(s.dim(), 2u);
  EXPECT_DOUBLE_EQ(s.weights[0], 1.0);
}

TEST(GmmSpec, DefaultDrawsRespectRanges) {
  const GmmConfig cfg;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto s = sample_gmm_spec(cfg, SeedPath(5, {i}));
    ASSERT_GE(s.components(), 1u);
    ASSERT_LE(s.components(), 5u);
    ASSERT_GE(s.dim(), 2u);
    ASSERT_LE(s.dim(), 100u);
    double total = 0.0;
    for (double w : s.weights) total += w;
    ASSERT_NEAR(total, 1.0, 1e-12);
    for (double v : s.variances.values()) {
      ASSERT_GT(v, 0.0);
      ASSERT_LE(v, 5.0);
    }
    for (double m : s.means.values()) ASSERT_LE(std::abs(m), 5.0);
    for (double a : s.affine_w.values()) ASSERT_LE(std::abs(a), 1.0);
    EXPECT_NO_THROW(s.validate());
  }
}

TEST(GmmSpec, DeterministicForSeed) {
  const GmmConfig cfg;
  const auto a = sample_gmm_spec(cfg, SeedPath(77, {3}));
  const auto b = sample_gmm_spec(cfg, SeedPath(77, {3}));
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.means, b.means);
  EXPECT_EQ(a.variances, b.variances);
  EXPECT_EQ(a.affine_w, b.affine_w);
  EXPECT_EQ(a.affine_b, b.affine_b);
}

TEST(GmmConfig, OutOfTableRangeRejected) {
  GmmConfig cfg;
  cfg.components = {1, 6};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.inflation = {2.0, 10.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(GmmSampling, StandardNormalMean) {
  const auto spec = GmmSpec::isotropic(3);
  const std::size_t n = 20000;
  const auto x = sample_points(spec, n, SeedPath(2));
  for (std::size_t j = 0; j < 3; ++j) {
    const auto c = x.column(j);
    EXPECT_LT(std::abs(mean(c)), 4.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST(GmmSampling, AffineScaleMultipliesVariance) {
  auto spec = GmmSpec::isotropic(1);
  spec.affine_w(0, 0) = 2.0;
  const std::size_t n = 40000;
  const auto x = sample_points(spec, n, SeedPath(3));
  // sd of the sample variance of N(0,4) is 4 sqrt(2/n) ~ 0.028
  EXPECT_NEAR(variance(x.column(0)), 4.0, 0.15);
}

TEST(GmmThreshold, OneDimensionalQuantile) {
  const auto spec = GmmSpec::isotropic(1);
  const double z = 1.6448536269514722;
  const double expected = 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * z * z;
  const double thr = nll_threshold(spec, 0.9, 200000, SeedPath(4));
  EXPECT_NEAR(thr, expected, 0.02);
}

TEST(GmmThreshold, MedianSplitsFreshDraws) {
  const auto spec = GmmSpec::isotropic(1);
  const double thr = nll_threshold(spec, 0.5, 100000, SeedPath(5));
  Rng rng = SeedPath(6).rng();
  std::vector<double> x(1);
  std::size_t below = 0;
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) {
    spec.draw_pre_transform(rng, x);
    below += spec.nll(x) <= thr;
  }
  EXPECT_NEAR(static_cast<double>(below) / n, 0.5, 0.015);
}

TEST(GmmThreshold, TwoDimensionalChiSquareRadius) {
  const auto spec = GmmSpec::isotropic(2);
  const double thr = nll_threshold(spec, 0.9, 200000, SeedPath(7));
  // nll = ln(2 pi) + r^2 / 2
  const double r2 = 2.0 * (thr - std::log(2.0 * std::numbers::pi));
  EXPECT_NEAR(r2, 4.605, 0.05);
}

TEST(GmmThreshold, ConvergesWithReferenceSize) {
  const auto spec = GmmSpec::isotropic(1);
  const double a = nll_threshold(spec, 0.9, 100000, SeedPath(8));
  const double b = nll_threshold(spec, 0.9, 200000, SeedPath(9));
  EXPECT_LT(std::abs(a - b) / std::abs(b), 0.02);
}

TEST(GmmThreshold, RejectsBadArguments) {
  const auto spec = GmmSpec::isotropic(1);
  EXPECT_THROW(nll_threshold(spec, 1.0, 5000, SeedPath(0)), DomainError);
  EXPECT_THROW(nll_threshold(spec, 0.9, 999, SeedPath(0)), DomainError);
}

TEST(GmmInflation, FullSubspaceScalesEveryVariance) {
  const auto spec = GmmSpec::isotropic(4, 0.7);
  const auto inf = inflate_subspace(spec, 1.0, 5.0, SeedPath(10));
  EXPECT_EQ(inf.dims.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(inf.spec.variances(0, j), 3.5);
}

TEST(GmmInflation, MinimalFractionInflatesOneDimension) {
  const auto spec = GmmSpec::isotropic(7);
  const auto inf = inflate_subspace(spec, 1.0 / 7.0, 6.0, SeedPath(11));
  ASSERT_EQ(inf.dims.size(), 1u);
  std::size_t changed = 0;
  for (std::size_t j = 0; j < 7; ++j) changed += inf.spec.variances(0, j) != 1.0;
  EXPECT_EQ(changed, 1u);
}

TEST(GmmInflation, DeterminantGrowsByScalePowerK) {
  GmmConfig cfg;
  cfg.dim = {10, 10};
  const auto spec = sample_gmm_spec(cfg, SeedPath(12));
  const auto inf = inflate_subspace(spec, 0.35, 5.0, SeedPath(13));
  const std::size_t k = inf.component;
  double log_ratio = 0.0;
  for (std::size_t j = 0; j < spec.dim(); ++j)
    log_ratio += std::log(inf.spec.variances(k, j)) - std::log(spec.variances(k, j));
  EXPECT_NEAR(log_ratio, static_cast<double>(inf.dims.size()) * std::log(5.0), 1e-12);
  EXPECT_EQ(inf.dims.size(), 4u);
}

TEST(GmmInflation, RejectsFractionBelowOneOverD) {
  EXPECT_THROW(inflate_subspace(GmmSpec::isotropic(5), 0.1, 5.0, SeedPath(0)), DomainError);
}

TEST(GmmDataset, LabelSoundness) {
  GmmConfig cfg;
  cfg.dim = {2, 12};
  cfg.n_ref = 5000;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto draw = generate_gmm_draw(cfg, 200, 30, SeedPath(14, {i}));
    for (std::size_t r = 0; r < draw.pre_inliers.rows(); ++r)
      ASSERT_LE(draw.spec.nll(draw.pre_inliers.row(r)), draw.threshold);
    for (std::size_t r = 0; r < draw.pre_outliers.rows(); ++r)
      ASSERT_GT(draw.spec.nll(draw.pre_outliers.row(r)), draw.threshold);
  }
}

TEST(GmmDataset, NoOutliersGivesAllInliers) {
  GmmConfig cfg;
  cfg.dim = {3, 3};
  cfg.n_ref = 2000;
  const auto draw = generate_gmm_draw(cfg, 100, 0, SeedPath(15));
  const auto ds = to_dataset(draw, SeedPath(15));
  EXPECT_EQ(ds.n_outliers(), 0u);
  EXPECT_EQ(ds.size(), 100u);
  for (std::size_t r = 0; r < draw.pre_inliers.rows(); ++r)
    EXPECT_LE(draw.spec.nll(draw.pre_inliers.row(r)), draw.threshold);
}

TEST(GmmDataset, DeterministicForSeed) {
  GmmConfig cfg;
  cfg.dim = {2, 8};
  cfg.n_ref = 2000;
  EXPECT_EQ(generate_gmm_dataset(cfg, 50, 5, SeedPath(16)), generate_gmm_dataset(cfg, 50, 5, SeedPath(16)));
}

TEST(GmmDataset, AffinePreservesMahalanobis) {
  GmmConfig cfg;
  cfg.dim = {5, 5};
  const auto spec = sample_gmm_spec(cfg, SeedPath(17));
  Eigen::MatrixXd w(5, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) w(i, j) = spec.affine_w(i, j);
  ASSERT_GT(std::abs(w.determinant()), 1e-6);
  Eigen::VectorXd b(5);
  for (std::size_t i = 0; i < 5; ++i) b(i) = spec.affine_b[i];
  Rng rng = SeedPath(18).rng();
  std::vector<double> x(5);
  for (int t = 0; t < 50; ++t) {
    spec.draw_pre_transform(rng, x);
    for (std::size_t k = 0; k < spec.components(); ++k) {
      const double pre = spec.mahalanobis_sq(k, x);
      Eigen::VectorXd xv(5), mu(5);
      Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(5, 5);
      for (std::size_t j = 0; j < 5; ++j) {
        xv(j) = x[j];
        mu(j) = spec.means(k, j);
        sigma(j, j) = spec.variances(k, j);
      }
      const Eigen::VectorXd tx = w * xv + b, tmu = w * mu + b;
      const Eigen::MatrixXd tsigma = w * sigma * w.transpose();
      const Eigen::VectorXd diff = tx - tmu;
      const double post = diff.dot(tsigma.ldlt().solve(diff));
      EXPECT_NEAR(post, pre, 1e-8 * std::max(1.0, pre));
    }
  }
}
