#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"
#include "odsynth/core/padding.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/curriculum/learner.hpp"
#include "odsynth/detectors/knn.hpp"

namespace odsynth::detectors {

struct ReferenceLearnerConfig {
  std::size_t input_dim = 100;
  std::size_t hidden = 64;
  double learning_rate = 1e-3;
  bool zero_init = false;
};

// Context-relative point features: z-score with context statistics, take the
// residual to the nearest context row, compress as log(1 + |r|) and sort
// descending. The d-vector is pre-scaled by d/D so that padding's D/d factor
// cancels, then padded (or subsampled) to width D.
inline Matrix featurize(const Matrix& context, const Matrix& query, std::size_t target_dim, const SeedPath& seed) {
  if (context.rows() == 0) throw DataError("featurize: empty context");
  if (context.cols() != query.cols()) throw DataError("featurize: context and query widths differ");
  const auto st = Standardizer::fit(context);
  const Matrix c = st.transform(context), q = st.transform(query);
  const std::size_t d = q.cols();
  const double pre = d < target_dim ? static_cast<double>(d) / static_cast<double>(target_dim) : 1.0;
  Matrix feats(q.rows(), d);
  std::vector<double> r(d);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c.rows(); ++k) {
      const double dist = squared_distance(q.row(i), c.row(k));
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    for (std::size_t j = 0; j < d; ++j) r[j] = std::log1p(std::abs(q(i, j) - c(best, j)));
    std::sort(r.begin(), r.end(), std::greater<>());
    for (std::size_t j = 0; j < d; ++j) feats(i, j) = pre * r[j];
  }
  return pad_and_rescale(feats, target_dim, seed);
}

// Single hidden layer (tanh) with a logistic output, trained by per-point SGD
// on binary cross-entropy.
class ReferenceLearner final : public curriculum::LearnerHandle {
 public:
  explicit ReferenceLearner(const ReferenceLearnerConfig& cfg, const SeedPath& seed = SeedPath(0)) : cfg_(cfg) {
    if (cfg.input_dim == 0 || cfg.hidden == 0) throw ConfigError("reference learner: sizes must be positive");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("reference learner: learning rate must be positive");
    const std::size_t dd = cfg.input_dim, h = cfg.hidden;
    params_.assign(h * dd + h + h + 1, 0.0);
    if (!cfg.zero_init) {
      Rng rng = seed.rng();
      const double s1 = 1.0 / std::sqrt(static_cast<double>(dd)), s2 = 1.0 / std::sqrt(static_cast<double>(h));
      for (std::size_t i = 0; i < h * dd; ++i) params_[i] = uniform(rng, -s1, s1);
      for (std::size_t i = 0; i < h; ++i) params_[h * dd + h + i] = uniform(rng, -s2, s2);
    }
  }

  const ReferenceLearnerConfig& config() const noexcept { return cfg_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  // Logit for one padded feature row; `hidden` receives tanh activations.
  double logit(std::span<const double> x, std::span<double> hidden) const {
    const std::size_t dd = cfg_.input_dim, h = cfg_.hidden;
    const double* w1 = params_.data();
    const double* b1 = w1 + h * dd;
    const double* w2 = b1 + h;
    const double b2 = w2[h];
    double z = b2;
    for (std::size_t u = 0; u < h; ++u) {
      double a = b1[u];
      const double* row = w1 + u * dd;
      for (std::size_t j = 0; j < dd; ++j) a += row[j] * x[j];
      hidden[u] = std::tanh(a);
      z += w2[u] * hidden[u];
    }
    return z;
  }

  static double bce_from_logit(double z, int y) {
    return std::max(z, 0.0) - static_cast<double>(y) * z + std::log1p(std::exp(-std::abs(z)));
  }

  double point_loss(std::span<const double> x, int y) const {
    std::vector<double> hidden(cfg_.hidden);
    return bce_from_logit(logit(x, hidden), y);
  }

  // Gradient of the point loss with respect to the flat parameter vector.
  std::vector<double> gradient(std::span<const double> x, int y) const {
    std::vector<double> g(params_.size(), 0.0);
    accumulate_gradient(x, y, g, 1.0);
    return g;
  }

  std::vector<double> losses(const curriculum::Batch& batch) override {
    ensure_features(batch);
    std::vector<double> out(batch.points());
    std::vector<double> hidden(cfg_.hidden);
    for (std::size_t p = 0; p < batch.points(); ++p) {
      const auto x = cache_[batch.item_of[p]].row(batch.row_of[p]);
      out[p] = bce_from_logit(logit(x, hidden), batch.label(p));
      if (!std::isfinite(out[p])) throw TrainingDiverged("reference learner produced a non-finite loss");
    }
    return out;
  }

  void update(const curriculum::Batch& batch, std::span<const std::size_t> kept, const SeedPath& seed) override {
    ensure_features(batch);
    std::vector<std::size_t> order(kept.begin(), kept.end());
    Rng rng = seed.rng();
    shuffle(rng, order);
    std::vector<double> g(params_.size());
    for (auto p : order) {
      std::fill(g.begin(), g.end(), 0.0);
      accumulate_gradient(cache_[batch.item_of[p]].row(batch.row_of[p]), batch.label(p), g, 1.0);
      for (std::size_t i = 0; i < params_.size(); ++i) params_[i] -= cfg_.learning_rate * g[i];
    }
    for (double v : params_)
      if (!std::isfinite(v)) throw TrainingDiverged("reference learner parameters became non-finite");
  }

  std::vector<double> predict(const Matrix& context, const Matrix& query, const SeedPath& seed) override {
    const Matrix f = featurize(context, query, cfg_.input_dim, seed);
    std::vector<double> out(f.rows());
    std::vector<double> hidden(cfg_.hidden);
    for (std::size_t i = 0; i < f.rows(); ++i) out[i] = 1.0 / (1.0 + std::exp(-logit(f.row(i), hidden)));
    return out;
  }

  nlohmann::json snapshot() const override {
    return {{"input_dim", cfg_.input_dim},
            {"hidden", cfg_.hidden},
            {"learning_rate", cfg_.learning_rate},
            {"params", params_}};
  }

  void restore(const nlohmann::json& j) override {
    try {
      cfg_.input_dim = j.at("input_dim").get<std::size_t>();
      cfg_.hidden = j.at("hidden").get<std::size_t>();
      cfg_.learning_rate = j.at("learning_rate").get<double>();
      params_ = j.at("params").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed learner snapshot: ") + e.what());
    }
    if (params_.size() != cfg_.hidden * cfg_.input_dim + 2 * cfg_.hidden + 1)
      throw DataError("learner snapshot parameter count mismatch");
    cache_keys_.clear();
    cache_.clear();
  }

 private:
  void accumulate_gradient(std::span<const double> x, int y, std::span<double> g, double scale) const {
    const std::size_t dd = cfg_.input_dim, h = cfg_.hidden;
    std::vector<double> hidden(h);
    const double z = logit(x, hidden);
    const double dz = scale * (1.0 / (1.0 + std::exp(-z)) - static_cast<double>(y));
    const double* w2 = params_.data() + h * dd + h;
    double* gw1 = g.data();
    double* gb1 = gw1 + h * dd;
    double* gw2 = gb1 + h;
    for (std::size_t u = 0; u < h; ++u) {
      gw2[u] += dz * hidden[u];
      const double da = dz * w2[u] * (1.0 - hidden[u] * hidden[u]);
      gb1[u] += da;
      double* row = gw1 + u * dd;
      for (std::size_t j = 0; j < dd; ++j) row[j] += da * x[j];
    }
    gw2[h] += dz;
  }

  void ensure_features(const curriculum::Batch& batch) {
    std::vector<SeedPath> keys;
    keys.reserve(batch.items.size());
    for (const auto& it : batch.items) keys.push_back(it.seed);
    if (keys == cache_keys_ && cache_.size() == batch.items.size()) return;
    cache_.clear();
    for (const auto& it : batch.items)
      cache_.push_back(featurize(it.task.context, it.task.query.features(), cfg_.input_dim, it.seed.child(7)));
    cache_keys_ = std::move(keys);
  }

  ReferenceLearnerConfig cfg_;
  std::vector<double> params_;
  std::vector<SeedPath> cache_keys_;
  std::vector<Matrix> cache_;
};

}  // namespace odsynth::detectors
