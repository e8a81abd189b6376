#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "odsynth/core/dataset_io.hpp"
#include "odsynth/core/padding.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/priors/gmm.hpp"

namespace fs = std::filesystem;
using namespace odsynth;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("odsynth_core_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Padding, IdentityWhenWidthMatches) {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(static_cast<double>(i));
  EXPECT_EQ(pad_and_rescale(x, 100, SeedPath(1)), x);
}

TEST(Padding, HalfWidthDoublesAndPads) {
  const std::vector<double> x(50, 1.0);
  const auto out = pad_and_rescale(x, 100, SeedPath(1));
  ASSERT_EQ(out.size(), 100u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_DOUBLE_EQ(out[i], 2.0);
  for (std::size_t i = 50; i < 100; ++i) EXPECT_DOUBLE_EQ(out[i], 0.0);
}

TEST(Padding, SubsampleKeepsExistingEntries) {
  std::vector<double> x(150);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) + 0.5;
  const auto out = pad_and_rescale(x, 100, SeedPath(7));
  ASSERT_EQ(out.size(), 100u);
  const std::set<double> pool(x.begin(), x.end());
  std::set<double> seen;
  for (double v : out) {
    EXPECT_TRUE(pool.count(v));
    EXPECT_TRUE(seen.insert(v).second);
  }
}

TEST(Padding, SquaredNormScalesByFactor) {
  Rng rng = SeedPath(3).rng();
  for (std::size_t d : {1u, 7u, 33u, 99u}) {
    std::vector<double> x(d);
    double n2 = 0.0;
    for (auto& v : x) {
      v = standard_normal(rng);
      n2 += v * v;
    }
    const auto out = pad_and_rescale(x, 100, SeedPath(0));
    double o2 = 0.0;
    for (double v : out) o2 += v * v;
    const double f = 100.0 / static_cast<double>(d);
    EXPECT_NEAR(o2, f * f * n2, 1e-9 * f * f * n2);
  }
}

TEST(Padding, RejectsNonFinite) {
  const std::vector<double> x{1.0, std::nan("")};
  EXPECT_THROW(pad_and_rescale(x, 4, SeedPath(0)), DataError);
}

TEST(Padding, MatrixRowsShareColumns) {
  Matrix x(3, 150);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 150; ++c) x(r, c) = static_cast<double>(c);
  const auto out = pad_and_rescale(x, 100, SeedPath(5));
  ASSERT_EQ(out.cols(), 100u);
  for (std::size_t c = 0; c < 100; ++c) {
    EXPECT_EQ(out(0, c), out(1, c));
    EXPECT_EQ(out(0, c), out(2, c));
  }
}

TEST(Seed, SamePathSameStream) {
  const SeedPath a(42, {1, 2, 3}), b(42, {1, 2, 3});
  Rng ra = a.rng(), rb = b.rng();
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(ra(), rb());
}

TEST(Seed, DistinctPathsDistinctKeys) {
  std::set<std::uint64_t> keys;
  const SeedPath root(42);
  keys.insert(root.key());
  for (std::uint64_t i = 0; i < 50; ++i) {
    keys.insert(root.child(i).key());
    for (std::uint64_t j = 0; j < 50; ++j) keys.insert(root.child(i, j).key());
  }
  keys.insert(SeedPath(43).key());
  EXPECT_EQ(keys.size(), 1u + 50u + 2500u + 1u);
}

TEST(Seed, ChildVariadicMatchesChain) {
  const SeedPath r(9);
  EXPECT_EQ(r.child(1, 2, 3), r.child(1).child(2).child(3));
  EXPECT_EQ(r.child(1, 2, 3).to_string(), "9/1/2/3");
}

TEST(Seed, SiblingStreamsUncorrelated) {
  Rng a = SeedPath(1, {0}).rng(), b = SeedPath(1, {1}).rng();
  const int n = 20000;
  double sab = 0.0, sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = uniform01(a), y = uniform01(b);
    sab += x * y, sa += x, sb += y, saa += x * x, sbb += y * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Dataset, RejectsBadShapes) {
  EXPECT_THROW(LabeledDataset(Matrix(2, 1), {Label::inlier}, {}), DataError);
  EXPECT_THROW(LabeledDataset(Matrix(0, 1), {}, {}), DataError);
  Matrix x(1, 1);
  x(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(LabeledDataset(x, {Label::inlier}, {}), DataError);
}

TEST(Dataset, ContaminationMatchesLabels) {
  const LabeledDataset ds(Matrix(4, 2), {Label::inlier, Label::outlier, Label::inlier, Label::inlier}, {});
  EXPECT_DOUBLE_EQ(ds.meta().contamination, 0.25);
  EXPECT_EQ(ds.meta().dim, 2u);
}

TEST(DatasetIo, SingleZeroRowRoundTrips) {
  const auto dir = scratch_dir("zero");
  const LabeledDataset ds(Matrix(1, 1, 0.0), {Label::inlier}, {});
  write_dataset(ds, dir / "z.csv");
  EXPECT_EQ(read_dataset(dir / "z.csv"), ds);
}

TEST(DatasetIo, GeneratedGmmRoundTrips) {
  const auto dir = scratch_dir("gmm");
  gmm::GmmConfig cfg;
  cfg.dim = {3, 6};
  cfg.n_ref = 2000;
  const auto ds = gmm::generate_gmm_dataset(cfg, 80, 9, SeedPath(11));
  write_dataset(ds, dir / "g.csv");
  const auto back = read_dataset(dir / "g.csv");
  EXPECT_EQ(back.labels(), ds.labels());
  EXPECT_EQ(to_json(back.meta()), to_json(ds.meta()));
  ASSERT_EQ(back.features().rows(), ds.features().rows());
  for (std::size_t i = 0; i < ds.features().values().size(); ++i)
    EXPECT_EQ(back.features().values()[i], ds.features().values()[i]);
}

TEST(DatasetIo, UnknownLabelToken) {
  const auto dir = scratch_dir("badlabel");
  std::ofstream(dir / "b.csv") << "f0,is_outlier\n1.0,0\n2.0,2\n";
  try {
    read_dataset(dir / "b.csv");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown label token"), std::string::npos);
  }
}

TEST(DatasetIo, RaggedRowRejected) {
  const auto dir = scratch_dir("ragged");
  std::ofstream(dir / "r.csv") << "f0,f1,is_outlier\n1.0,2.0,0\n2.0,1\n";
  EXPECT_THROW(read_dataset(dir / "r.csv"), DataError);
}

TEST(DatasetIo, ExternalCsvTakesLastColumnAsLabel) {
  const auto dir = scratch_dir("external");
  std::ofstream(dir / "e.csv") << "a,b,y\n1,2,0\n3,4,1\n5,6,0\n";
  const auto ds = read_external_csv(dir / "e.csv");
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(ds.label_ints(), (std::vector<int>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(ds.features()(1, 1), 4.0);
}
