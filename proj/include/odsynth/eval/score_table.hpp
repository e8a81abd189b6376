#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "odsynth/core/dataset_io.hpp"
#include "odsynth/core/error.hpp"

namespace odsynth::eval {

enum class Metric { auroc, auprc };

inline std::string_view to_string(Metric m) { return m == Metric::auroc ? "auroc" : "auprc"; }

inline Metric parse_metric(std::string_view s) {
  if (s == "auroc") return Metric::auroc;
  if (s == "auprc") return Metric::auprc;
  throw ConfigError("unknown metric '" + std::string(s) + "' (expected auroc or auprc)");
}

// Performance values, |D| x |M|. Models and datasets keep first-seen order.
// Error convention: E = 1 - value.
class ScoreTable {
 public:
  ScoreTable() = default;
  ScoreTable(std::vector<std::string> datasets, std::vector<std::string> models, Metric metric = Metric::auroc)
      : datasets_(std::move(datasets)), models_(std::move(models)), metric_(metric),
        cells_(datasets_.size() * models_.size()) {
    index();
  }

  const std::vector<std::string>& datasets() const noexcept { return datasets_; }
  const std::vector<std::string>& models() const noexcept { return models_; }
  Metric metric() const noexcept { return metric_; }
  std::size_t n_datasets() const noexcept { return datasets_.size(); }
  std::size_t n_models() const noexcept { return models_.size(); }

  std::size_t model_index(std::string_view m) const {
    auto it = model_idx_.find(std::string(m));
    if (it == model_idx_.end()) throw DataError("model '" + std::string(m) + "' not in score table");
    return it->second;
  }

  void set(std::size_t d, std::size_t m, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("score " + format_double(v) + " outside [0,1]");
    cells_.at(d * models_.size() + m) = v;
  }

  bool has(std::size_t d, std::size_t m) const { return cells_.at(d * models_.size() + m).has_value(); }

  double value(std::size_t d, std::size_t m) const {
    const auto& c = cells_.at(d * models_.size() + m);
    if (!c) throw DataError("missing score for " + datasets_[d] + "/" + models_[m]);
    return *c;
  }
  double error(std::size_t d, std::size_t m) const { return 1.0 - value(d, m); }

  // "dataset/model" for every empty cell.
  std::vector<std::string> missing_cells() const {
    std::vector<std::string> out;
    for (std::size_t d = 0; d < datasets_.size(); ++d)
      for (std::size_t m = 0; m < models_.size(); ++m)
        if (!has(d, m)) out.push_back(datasets_[d] + "/" + models_[m]);
    return out;
  }

  void require_complete() const {
    if (datasets_.empty() || models_.empty()) throw DataError("score table is empty");
    const auto miss = missing_cells();
    if (miss.empty()) return;
    std::string msg = "score table incomplete, missing " + std::to_string(miss.size()) + " cell(s):";
    for (const auto& c : miss) msg += " " + c;
    throw DataError(msg);
  }

  std::vector<double> errors_for_dataset(std::size_t d) const {
    std::vector<double> e(models_.size());
    for (std::size_t m = 0; m < models_.size(); ++m) e[m] = error(d, m);
    return e;
  }

  // Rows `dataset,model,metric,value`; rows for other metrics are skipped.
  static ScoreTable from_csv(std::istream& is, Metric metric) {
    ScoreTable t;
    t.metric_ = metric;
    std::map<std::string, std::size_t> di;
    std::vector<std::tuple<std::size_t, std::size_t, double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (lineno == 1 && !cells.empty() && cells[0] == "dataset") continue;
      if (cells.size() != 4) throw DataError("score CSV line " + std::to_string(lineno) + ": expected 4 fields");
      if (cells[2] != to_string(metric)) continue;
      double v;
      try {
        v = parse_double(cells[3]);
      } catch (const DataError&) {
        throw DataError("score CSV line " + std::to_string(lineno) + ": bad value '" + cells[3] + "'");
      }
      auto [dit, dnew] = di.try_emplace(cells[0], t.datasets_.size());
      if (dnew) t.datasets_.push_back(cells[0]);
      auto [mit, mnew] = t.model_idx_.try_emplace(cells[1], t.models_.size());
      if (mnew) t.models_.push_back(cells[1]);
      rows.emplace_back(dit->second, mit->second, v);
    }
    t.cells_.assign(t.datasets_.size() * t.models_.size(), std::nullopt);
    for (const auto& [d, m, v] : rows) {
      if (t.has(d, m)) throw DataError("duplicate score for " + t.datasets_[d] + "/" + t.models_[m]);
      t.set(d, m, v);
    }
    return t;
  }

  static ScoreTable from_csv_file(const std::filesystem::path& p, Metric metric) {
    std::ifstream is(p);
    if (!is) throw DataError("cannot open score table " + p.string());
    return from_csv(is, metric);
  }

  void to_csv(std::ostream& os) const {
    os << "dataset,model,metric,value\n";
    for (std::size_t d = 0; d < datasets_.size(); ++d)
      for (std::size_t m = 0; m < models_.size(); ++m)
        if (has(d, m)) os << datasets_[d] << ',' << models_[m] << ',' << to_string(metric_) << ',' << format_double(value(d, m)) << '\n';
  }

 private:
  void index() {
    model_idx_.clear();
    for (std::size_t m = 0; m < models_.size(); ++m)
      if (!model_idx_.emplace(models_[m], m).second) throw DataError("duplicate model name " + models_[m]);
  }

  std::vector<std::string> datasets_;
  std::vector<std::string> models_;
  Metric metric_ = Metric::auroc;
  std::vector<std::optional<double>> cells_;
  std::map<std::string, std::size_t> model_idx_;
};

}  // namespace odsynth::eval
