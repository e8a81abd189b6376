#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/core/seed.hpp"
#include "odsynth/priors/registry.hpp"

namespace odsynth::curriculum {

// One sampled dataset inside an epoch batch. Points are the query rows.
struct BatchItem {
  std::size_t category = 0;
  Task task;
  SeedPath seed;
};

// Epoch batch; point p of the flat view belongs to items[item_of[p]] at
// query row row_of[p].
struct Batch {
  std::vector<BatchItem> items;
  std::vector<std::size_t> item_of;
  std::vector<std::size_t> row_of;

  std::size_t points() const noexcept { return item_of.size(); }

  void add(BatchItem item) {
    const std::size_t k = items.size();
    for (std::size_t r = 0; r < item.task.query.size(); ++r) {
      item_of.push_back(k);
      row_of.push_back(r);
    }
    items.push_back(std::move(item));
  }

  int label(std::size_t p) const {
    return items[item_of[p]].task.query.labels()[row_of[p]] == Label::outlier ? 1 : 0;
  }
  std::size_t category(std::size_t p) const { return items[item_of[p]].category; }
};

// The curriculum's only view of a model.
class LearnerHandle {
 public:
  virtual ~LearnerHandle() = default;
  // Per-point binary cross-entropy for every point of the batch, in flat order.
  virtual std::vector<double> losses(const Batch& batch) = 0;
  // One training pass over the kept points.
  virtual void update(const Batch& batch, std::span<const std::size_t> kept, const SeedPath& seed) = 0;
  // Outlier probabilities for query rows given a clean context.
  virtual std::vector<double> predict(const Matrix& context, const Matrix& query, const SeedPath& seed) = 0;
  virtual nlohmann::json snapshot() const = 0;
  virtual void restore(const nlohmann::json& j) = 0;
};

}  // namespace odsynth::curriculum
