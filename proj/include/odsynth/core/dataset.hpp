#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"
#include "odsynth/core/seed.hpp"

namespace odsynth {

enum class Label : std::uint8_t { inlier = 0, outlier = 1 };

enum class PriorKind { gmm, scm, copula, external };

enum class Archetype { none, subspace, measurement, structural, probabilistic, dependence };

inline std::string_view to_string(PriorKind p) {
  switch (p) {
    case PriorKind::gmm: return "gmm";
    case PriorKind::scm: return "scm";
    case PriorKind::copula: return "copula";
    case PriorKind::external: return "external";
  }
  return "external";
}

inline std::string_view to_string(Archetype a) {
  switch (a) {
    case Archetype::none: return "none";
    case Archetype::subspace: return "subspace";
    case Archetype::measurement: return "measurement";
    case Archetype::structural: return "structural";
    case Archetype::probabilistic: return "probabilistic";
    case Archetype::dependence: return "dependence";
  }
  return "none";
}

inline PriorKind parse_prior_kind(std::string_view s) {
  if (s == "gmm") return PriorKind::gmm;
  if (s == "scm") return PriorKind::scm;
  if (s == "copula") return PriorKind::copula;
  if (s == "external") return PriorKind::external;
  throw DataError("unknown prior kind '" + std::string(s) + "'");
}

inline Archetype parse_archetype(std::string_view s) {
  for (auto a : {Archetype::none, Archetype::subspace, Archetype::measurement, Archetype::structural,
                 Archetype::probabilistic, Archetype::dependence}) {
    if (to_string(a) == s) return a;
  }
  throw DataError("unknown archetype '" + std::string(s) + "'");
}

struct DatasetMeta {
  PriorKind prior = PriorKind::external;
  Archetype archetype = Archetype::none;
  std::size_t dim = 0;
  double contamination = 0.0;
  SeedPath seed;
  nlohmann::json hyperparameters = nlohmann::json::object();

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

inline nlohmann::json to_json(const DatasetMeta& m) {
  return {{"prior", to_string(m.prior)},
          {"archetype", to_string(m.archetype)},
          {"dim", m.dim},
          {"contamination", m.contamination},
          {"seed", {{"master", m.seed.master()}, {"path", m.seed.path()}}},
          {"hyperparameters", m.hyperparameters}};
}

inline DatasetMeta meta_from_json(const nlohmann::json& j) {
  try {
    DatasetMeta m;
    m.prior = parse_prior_kind(j.at("prior").get<std::string>());
    m.archetype = parse_archetype(j.at("archetype").get<std::string>());
    m.dim = j.at("dim").get<std::size_t>();
    m.contamination = j.at("contamination").get<double>();
    const auto& s = j.at("seed");
    m.seed = SeedPath(s.at("master").get<std::uint64_t>(), s.at("path").get<std::vector<std::uint64_t>>());
    m.hyperparameters = j.value("hyperparameters", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset metadata: ") + e.what());
  }
}

// Feature matrix plus binary labels. Immutable after construction; the
// constructor enforces shape, finiteness, and that the recorded contamination
// matches the observed outlier fraction.
class LabeledDataset {
 public:
  LabeledDataset(Matrix features, std::vector<Label> labels, DatasetMeta meta)
      : features_(std::move(features)), labels_(std::move(labels)), meta_(std::move(meta)) {
    if (features_.rows() == 0 || features_.cols() == 0) throw DataError("dataset must have n >= 1 and d >= 1");
    if (labels_.size() != features_.rows()) throw DataError("labels length does not match row count");
    for (double v : features_.values())
      if (!std::isfinite(v)) throw DataError("non-finite feature value");
    meta_.dim = features_.cols();
    meta_.contamination = static_cast<double>(n_outliers()) / static_cast<double>(size());
  }

  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  const DatasetMeta& meta() const noexcept { return meta_; }

  std::size_t n_outliers() const noexcept {
    std::size_t n = 0;
    for (auto l : labels_) n += (l == Label::outlier);
    return n;
  }

  // Labels as 0/1 doubles (1 = outlier), the form metrics consume.
  std::vector<int> label_ints() const {
    std::vector<int> out(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) out[i] = labels_[i] == Label::outlier ? 1 : 0;
    return out;
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  Matrix features_;
  std::vector<Label> labels_;
  DatasetMeta meta_;
};

// Assembles a dataset from separate inlier/outlier blocks in a seeded random
// order.
inline LabeledDataset assemble_dataset(const Matrix& inliers, const Matrix& outliers, DatasetMeta meta,
                                       const SeedPath& seed) {
  const std::size_t n = inliers.rows() + outliers.rows();
  const std::size_t d = inliers.rows() ? inliers.cols() : outliers.cols();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = seed.rng();
  shuffle(rng, order);
  Matrix x(n, d);
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    const bool is_in = src < inliers.rows();
    auto row = is_in ? inliers.row(src) : outliers.row(src - inliers.rows());
    std::copy(row.begin(), row.end(), x.row(i).begin());
    y[i] = is_in ? Label::inlier : Label::outlier;
  }
  return LabeledDataset(std::move(x), std::move(y), std::move(meta));
}

}  // namespace odsynth
