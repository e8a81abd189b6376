#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "odsynth/detectors/ensemble.hpp"
#include "odsynth/detectors/iforest.hpp"
#include "odsynth/detectors/knn.hpp"
#include "odsynth/detectors/reference_learner.hpp"
#include "odsynth/eval/metrics.hpp"

using namespace odsynth;
using namespace odsynth::detectors;

namespace {

Matrix gaussian_matrix(std::size_t n, std::size_t d, const SeedPath& seed, double shift = 0.0) {
  Rng rng = seed.rng();
  Matrix m(n, d);
  for (auto& v : m.values()) v = shift + standard_normal(rng);
  return m;
}

}  // namespace

TEST(Knn, QueryOnContextPointScoresZero) {
  const auto ctx = gaussian_matrix(30, 4, SeedPath(1));
  const auto s = knn_score(ctx, ctx, 1);
  for (double v : s) EXPECT_EQ(v, 0.0);
}

TEST(Knn, HandDistance) {
  const Matrix ctx(1, 1, 0.0), q(1, 1, 3.0);
  EXPECT_DOUBLE_EQ(knn_score(ctx, q, 1)[0], 3.0);
}

TEST(Knn, MatchesBruteForceOracle) {
  const auto ctx = gaussian_matrix(2000, 6, SeedPath(2));
  const auto q = gaussian_matrix(100, 6, SeedPath(3), 0.5);
  const std::vector<std::size_t> ks{1, 5, 10, 20, 50};
  const auto multi = knn_scores_multi(ctx, q, ks);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::vector<double> all;
    for (std::size_t c = 0; c < ctx.rows(); ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 6; ++j) acc += (q(i, j) - ctx(c, j)) * (q(i, j) - ctx(c, j));
      all.push_back(std::sqrt(acc));
    }
    std::sort(all.begin(), all.end());
    for (std::size_t t = 0; t < ks.size(); ++t) {
      EXPECT_EQ(multi[t][i], all[ks[t] - 1]);
      if (i < 10) EXPECT_EQ(knn_score(ctx, q.select_rows(std::vector<std::size_t>{i}), ks[t])[0], all[ks[t] - 1]);
    }
  }
}

TEST(Knn, RejectsBadK) {
  const auto ctx = gaussian_matrix(5, 2, SeedPath(4));
  EXPECT_THROW(knn_score(ctx, ctx, 0), DomainError);
  EXPECT_THROW(knn_score(ctx, ctx, 6), DomainError);
}

TEST(IForest, PathLengthConstant) {
  EXPECT_EQ(average_path_length(1.0), 0.0);
  EXPECT_EQ(average_path_length(2.0), 1.0);
  EXPECT_NEAR(average_path_length(256.0), 2.0 * (std::log(255.0) + 0.5772156649015329) - 2.0 * 255.0 / 256.0, 1e-12);
}

TEST(IForest, ExtremePointScoresHighest) {
  const auto ctx = gaussian_matrix(500, 3, SeedPath(5));
  Matrix q = gaussian_matrix(50, 3, SeedPath(6));
  for (std::size_t j = 0; j < 3; ++j) q(0, j) = 12.0;
  const auto f = iforest_fit(ctx, IForestConfig{}, SeedPath(7));
  const auto s = iforest_score(f, q);
  EXPECT_EQ(std::max_element(s.begin(), s.end()) - s.begin(), 0);
  EXPECT_GT(s[0], 0.6);
}

TEST(IForest, DuplicatedContextGivesEqualScores) {
  Matrix ctx(300, 2);
  for (std::size_t r = 0; r < ctx.rows(); ++r) {
    ctx(r, 0) = 1.5;
    ctx(r, 1) = -2.0;
  }
  const auto f = iforest_fit(ctx, IForestConfig{}, SeedPath(8));
  const auto s = iforest_score(f, gaussian_matrix(20, 2, SeedPath(9)));
  for (double v : s) EXPECT_EQ(v, s[0]);
}

TEST(IForest, DeterministicForSeed) {
  const auto ctx = gaussian_matrix(400, 5, SeedPath(10));
  const auto q = gaussian_matrix(40, 5, SeedPath(11));
  EXPECT_EQ(iforest_score(iforest_fit(ctx, {}, SeedPath(12)), q), iforest_score(iforest_fit(ctx, {}, SeedPath(12)), q));
}

TEST(IForest, AurocStableUnderJointFeaturePermutation) {
  const std::size_t d = 6;
  const auto ctx = gaussian_matrix(600, d, SeedPath(13));
  Matrix q = gaussian_matrix(300, d, SeedPath(14));
  std::vector<int> y(q.rows(), 0);
  for (std::size_t i = 0; i < 30; ++i) {
    y[i] = 1;
    for (std::size_t j = 0; j < 2; ++j) q(i, j) *= 4.0;
  }
  const std::vector<std::size_t> perm{4, 2, 0, 5, 1, 3};
  double a = 0.0, b = 0.0;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    a += eval::auroc(iforest_score(iforest_fit(ctx, {}, SeedPath(15, {rep})), q), y) / 5.0;
    b += eval::auroc(iforest_score(iforest_fit(ctx.select_cols(perm), {}, SeedPath(15, {rep})), q.select_cols(perm)),
                     y) /
         5.0;
  }
  EXPECT_NEAR(a, b, 0.02);
}

TEST(Ensemble, SingleFullMemberIsRankNormalizedBase) {
  const auto ctx = gaussian_matrix(80, 4, SeedPath(16));
  const auto q = gaussian_matrix(25, 4, SeedPath(17), 0.3);
  const Scorer knn5 = [](const Matrix& c, const Matrix& x, const SeedPath&) { return knn_score(c, x, 5); };
  EnsembleConfig cfg{1, 1000, 100};
  const auto e = ensemble_score(knn5, ctx, q, cfg, SeedPath(18));
  EXPECT_EQ(e, rank_normalize(knn_score(ctx, q, 5)));
}

TEST(Ensemble, MemberScoresIndependentOfJobs) {
  const auto ctx = gaussian_matrix(300, 12, SeedPath(19));
  const auto q = gaussian_matrix(40, 12, SeedPath(20));
  const Scorer iso = [](const Matrix& c, const Matrix& x, const SeedPath& s) {
    return iforest_score(iforest_fit(c, IForestConfig{20, 64, 1.0}, s), x);
  };
  EnsembleConfig cfg{7, 100, 5};
  const auto a = ensemble_score(iso, ctx, q, cfg, SeedPath(21), 1);
  const auto b = ensemble_score(iso, ctx, q, cfg, SeedPath(21), 4);
  EXPECT_EQ(a, b);
  EXPECT_THROW(ensemble_score(iso, ctx, q, EnsembleConfig{0, 1, 1}, SeedPath(21)), ConfigError);
}

TEST(Ensemble, RankNormalizeRange) {
  const std::vector<double> s{3.0, 1.0, 2.0, 2.0};
  const auto r = rank_normalize(s);
  EXPECT_EQ(r.size(), 4u);
  for (double v : r) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(r[2], r[3]);
  EXPECT_GT(r[0], r[2]);
  EXPECT_LT(r[1], r[2]);
}

TEST(ReferenceLearner, ZeroInitGivesHalfProbabilities) {
  ReferenceLearnerConfig cfg;
  cfg.input_dim = 16;
  cfg.zero_init = true;
  ReferenceLearner l(cfg);
  const auto x = gaussian_matrix(5, 16, SeedPath(22));
  for (std::size_t i = 0; i < 5; ++i)
    for (int y : {0, 1}) EXPECT_NEAR(l.point_loss(x.row(i), y), std::numbers::ln2, 1e-15);
  const auto p = l.predict(gaussian_matrix(20, 3, SeedPath(23)), gaussian_matrix(4, 3, SeedPath(24)), SeedPath(25));
  for (double v : p) EXPECT_EQ(v, 0.5);
}

TEST(ReferenceLearner, GradientMatchesFiniteDifference) {
  ReferenceLearnerConfig cfg;
  cfg.input_dim = 7;
  cfg.hidden = 5;
  ReferenceLearner l(cfg, SeedPath(26));
  auto params = l.parameters();
  Rng rng = SeedPath(27).rng();
  for (auto& v : params) v += 0.3 * standard_normal(rng);
  const auto x = gaussian_matrix(1, 7, SeedPath(28));
  for (int y : {0, 1}) {
    const auto g = l.gradient(x.row(0), y);
    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + h;
      const double up = l.point_loss(x.row(0), y);
      params[i] = keep - h;
      const double down = l.point_loss(x.row(0), y);
      params[i] = keep;
      EXPECT_NEAR(g[i], (up - down) / (2.0 * h), 1e-5) << "param " << i;
    }
  }
}

TEST(ReferenceLearner, SnapshotRestoresPredictions) {
  ReferenceLearnerConfig cfg;
  cfg.input_dim = 10;
  ReferenceLearner a(cfg, SeedPath(29)), b(cfg, SeedPath(30));
  b.restore(a.snapshot());
  const auto ctx = gaussian_matrix(30, 4, SeedPath(31)), q = gaussian_matrix(6, 4, SeedPath(32));
  EXPECT_EQ(a.predict(ctx, q, SeedPath(33)), b.predict(ctx, q, SeedPath(33)));
  EXPECT_THROW(b.restore(nlohmann::json{{"input_dim", 3}}), DataError);
}

TEST(ReferenceLearner, LossesFiniteAndNonNegative) {
  ReferenceLearnerConfig cfg;
  cfg.input_dim = 20;
  ReferenceLearner l(cfg, SeedPath(34));
  curriculum::Batch batch;
  const Matrix q = gaussian_matrix(12, 5, SeedPath(35), 1.0);
  std::vector<Label> y(12, Label::inlier);
  y[0] = y[5] = Label::outlier;
  batch.add({0, Task{gaussian_matrix(40, 5, SeedPath(36)), LabeledDataset(q, y, {})}, SeedPath(37)});
  const auto losses = l.losses(batch);
  ASSERT_EQ(losses.size(), 12u);
  for (double v : losses) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
  std::vector<std::size_t> kept(12);
  for (std::size_t i = 0; i < 12; ++i) kept[i] = i;
  l.update(batch, kept, SeedPath(38));
  const auto after = l.losses(batch);
  double before_sum = 0.0, after_sum = 0.0;
  for (std::size_t i = 0; i < 12; ++i) before_sum += losses[i], after_sum += after[i];
  EXPECT_LT(after_sum, before_sum);
}
