#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "odsynth/priors/scm.hpp"
#include "test_util.hpp"

using namespace odsynth;
using namespace odsynth::scm;
using odsynth::testing::ks_critical;
using odsynth::testing::ks_two_sample;
using odsynth::testing::variance;

namespace {

std::size_t active_edges(const ScmGraph& g) {
  std::size_t n = 0;
  for (const auto& m : g.mask)
    for (auto v : m) n += v;
  return n;
}

// Two-node chain x0 -> x1 with a given weight and identity activation; both
// nodes selected.
ScmGraph chain(double w) {
  ScmGraph g;
  g.layer_sizes = {1, 1};
  g.weights = {Matrix(1, 1, w)};
  g.mask = {{1}};
  g.activation = Activation::identity;
  g.features = {0, 1};
  g.target = 1;
  g.noise_scale = {1.0, 1.0};
  return g;
}

}  // namespace

TEST(ScmGraph, ZeroDropRateIsDense) {
  ScmConfig cfg;
  cfg.drop_rate = {0.0, 0.0};
  const auto g = sample_scm(cfg, 5, SeedPath(1));
  std::size_t possible = 0;
  for (std::size_t l = 0; l + 1 < g.layer_sizes.size(); ++l) possible += g.layer_sizes[l] * g.layer_sizes[l + 1];
  EXPECT_EQ(active_edges(g), possible);
}

TEST(ScmGraph, FullDropRateRejectedOrNoiseOnly) {
  ScmConfig cfg;
  cfg.drop_rate = {1.0, 1.0};
  cfg.max_graph_retries = 5;
  EXPECT_THROW(sample_scm(cfg, 5, SeedPath(2)), GenerationStalled);
  cfg.allow_noise_only = true;
  const auto g = sample_scm(cfg, 5, SeedPath(2));
  EXPECT_EQ(active_edges(g), 0u);
  EXPECT_EQ(g.dim(), 5u);
}

TEST(ScmGraph, DefaultShapeWithinRanges) {
  const ScmConfig cfg;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto g = sample_scm(cfg, SeedPath(3, {i}));
    ASSERT_GE(g.layer_sizes.size(), 3u);
    ASSERT_LE(g.layer_sizes.size(), 5u);
    ASSERT_GE(g.layer_sizes[0], 20u);
    ASSERT_LE(g.layer_sizes[0], 40u);
    ASSERT_GE(g.drop_rate, 0.4);
    ASSERT_LE(g.drop_rate, 0.6);
    ASSERT_GE(g.dim(), 2u);
    ASSERT_LE(g.dim(), 100u);
    std::vector<std::size_t> sel = g.features;
    sel.push_back(g.target);
    std::sort(sel.begin(), sel.end());
    ASSERT_EQ(std::adjacent_find(sel.begin(), sel.end()), sel.end());
    ASSERT_LT(sel.back(), g.node_count());
  }
}

TEST(ScmGraph, EdgesOnlyBetweenConsecutiveLayers) {
  const auto g = sample_scm(ScmConfig{}, 10, SeedPath(4));
  const auto ch = g.children();
  for (std::size_t l = 0; l < g.layer_sizes.size(); ++l)
    for (std::size_t v = g.offset(l); v < g.offset(l) + g.layer_sizes[l]; ++v)
      for (auto c : ch[v]) {
        EXPECT_GE(c, g.offset(l + 1));
        EXPECT_LT(c, g.offset(l + 1) + g.layer_sizes[l + 1]);
      }
}

TEST(ScmGraph, ReluValuesNonNegative) {
  ScmConfig cfg;
  cfg.activations = {Activation::relu};
  const auto g = sample_scm(cfg, 12, SeedPath(5));
  Rng rng = SeedPath(6).rng();
  std::vector<double> noise(g.node_count()), values(g.node_count());
  for (int i = 0; i < 200; ++i) {
    for (auto& e : noise) e = standard_normal(rng);
    g.forward(noise, values);
    for (std::size_t v = g.layer_sizes[0]; v < g.node_count(); ++v) ASSERT_GE(values[v], 0.0);
  }
}

TEST(ScmSampling, FrozenMechanismAcrossBatches) {
  const auto g = sample_scm(ScmConfig{}, 6, SeedPath(7));
  const auto before = g.weights;
  const auto a = forward_sample(g, 100, SeedPath(8));
  const auto b = forward_sample(g, 100, SeedPath(9));
  EXPECT_EQ(g.weights, before);
  EXPECT_NE(a, b);
  EXPECT_EQ(a, forward_sample(g, 100, SeedPath(8)));
}

TEST(ScmMeasurement, UnitInflationMatchesInliers) {
  const auto g = sample_scm(ScmConfig{}, 4, SeedPath(10));
  const std::size_t n = 10000;
  const auto in = forward_sample(g, n, SeedPath(11));
  const auto out = measurement_outliers(g, n, 1.0, SeedPath(12));
  for (std::size_t j = 0; j < g.dim(); ++j)
    EXPECT_LT(ks_two_sample(in.column(j), out.column(j)), ks_critical(n, n));
}

TEST(ScmMeasurement, ChainVarianceGrowsByWeightSquared) {
  const double w = 1.7, s = 6.0;
  const auto g = chain(w);
  const std::size_t n = 200000;
  std::vector<std::size_t> chosen;
  const auto out = measurement_outliers(g, n, s, SeedPath(13), &chosen);
  // Keep the points whose inflated node was x0.
  std::vector<double> x1;
  for (std::size_t i = 0; i < n; ++i)
    if (chosen[i] == 0) x1.push_back(out(i, 1));
  const auto in = forward_sample(g, n, SeedPath(14));
  const double base = variance(in.column(1));
  EXPECT_NEAR(base, w * w + 1.0, 0.05);
  EXPECT_NEAR(variance(x1) - base, w * w * (s - 1.0), 0.25);
}

TEST(ScmMeasurement, NonDescendantFeaturesKeepMarginals) {
  const auto g = sample_scm(ScmConfig{}, 6, SeedPath(15));
  const std::size_t n = 10000;
  std::vector<std::size_t> chosen;
  const auto out = measurement_outliers(g, n, 8.0, SeedPath(16), &chosen);
  const auto in = forward_sample(g, n, SeedPath(17));
  std::map<std::size_t, std::vector<std::uint8_t>> reach;
  for (auto f : g.features) {
    const std::size_t root[] = {f};
    reach[f] = g.descendants_of(root);
  }
  std::size_t checked = 0;
  for (std::size_t j = 0; j < g.dim(); ++j) {
    const std::size_t f = g.features[j];
    // Rows whose chosen node cannot reach feature j.
    std::vector<double> rows;
    for (std::size_t i = 0; i < n; ++i)
      if (!reach[chosen[i]][f]) rows.push_back(out(i, j));
    if (rows.size() < 2000) continue;
    EXPECT_LT(ks_two_sample(in.column(j), rows), ks_critical(n, rows.size())) << "feature " << j;
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(ScmStructural, FlipKeepsOrientationAndMask) {
  const auto g = sample_scm(ScmConfig{}, 8, SeedPath(18));
  const auto p = perturb_edges(g, 0.0, 1.0, 10, SeedPath(19));
  EXPECT_EQ(p.graph.mask, g.mask);
  EXPECT_EQ(p.broken, 0u);
  EXPECT_EQ(p.flipped, active_edges(g));
  for (std::size_t l = 0; l < g.weights.size(); ++l)
    for (std::size_t e = 0; e < g.weights[l].values().size(); ++e)
      EXPECT_EQ(p.graph.weights[l].values()[e], -g.weights[l].values()[e]);
  const auto ch0 = g.children(), ch1 = p.graph.children();
  EXPECT_EQ(ch0, ch1);
}

TEST(ScmStructural, PerturbationReachesAFeature) {
  const auto g = sample_scm(ScmConfig{}, 8, SeedPath(20));
  const auto p = perturb_edges(g, 0.1, 0.1, 100, SeedPath(21));
  EXPECT_GT(p.broken + p.flipped, 0u);
  // Some feature must lie downstream of an edge whose weight changed.
  std::vector<std::size_t> heads;
  for (std::size_t l = 0; l < g.weights.size(); ++l)
    for (std::size_t to = 0; to < g.layer_sizes[l + 1]; ++to)
      for (std::size_t from = 0; from < g.layer_sizes[l]; ++from)
        if (g.weights[l](to, from) != p.graph.weights[l](to, from)) heads.push_back(g.offset(l + 1) + to);
  const auto reach = g.descendants_of(heads);
  EXPECT_TRUE(std::any_of(g.features.begin(), g.features.end(), [&](std::size_t f) { return reach[f] != 0; }));
}

TEST(ScmStructural, NullPerturbationExhaustsRetries) {
  auto g = chain(0.0);
  EXPECT_THROW(perturb_edges(g, 0.5, 0.5, 20, SeedPath(22)), GenerationStalled);
}

TEST(ScmStructural, SingleEdgeFlipAlgebra) {
  const double w = 0.8;
  const auto g = chain(w);
  const auto p = perturb_edges(g, 0.0, 1.0, 5, SeedPath(23));
  Rng rng = SeedPath(24).rng();
  std::vector<double> noise(2), a(2), b(2);
  for (int i = 0; i < 20; ++i) {
    noise = {standard_normal(rng), standard_normal(rng)};
    g.forward(noise, a);
    p.graph.forward(noise, b);
    EXPECT_NEAR(a[1] - b[1], 2.0 * w * a[0], 1e-12);
  }
}

TEST(ScmDataset, NoOutliersAndDeterminism) {
  const ScmConfig cfg;
  const auto ds = generate_scm_dataset(cfg, Archetype::structural, 120, 0, SeedPath(25));
  EXPECT_EQ(ds.n_outliers(), 0u);
  const auto a = generate_scm_dataset(cfg, Archetype::measurement, 120, 12, SeedPath(26));
  const auto b = generate_scm_dataset(cfg, Archetype::measurement, 120, 12, SeedPath(26));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.n_outliers(), 12u);
}

TEST(ScmDataset, WrongArchetypeRejected) {
  EXPECT_THROW(generate_scm_dataset(ScmConfig{}, Archetype::subspace, 10, 1, SeedPath(0)), ConfigError);
}
