#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "odsynth/core/dataset_io.hpp"
#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"

namespace odsynth::dedup {

using ColumnHash = std::array<double, 5>;

// Means of sin(x), cos(e x), x/(1+|x|), atan(x), log(|x|+1) over the column.
inline ColumnHash feature_hash(std::span<const double> column) {
  if (column.empty()) throw DataError("feature_hash: empty column");
  ColumnHash h{};
  for (double x : column) {
    if (!std::isfinite(x)) throw DataError("feature_hash: non-finite value");
    h[0] += std::sin(x);
    h[1] += std::cos(std::numbers::e * x);
    h[2] += x / (1.0 + std::abs(x));
    h[3] += std::atan(x);
    h[4] += std::log(std::abs(x) + 1.0);
  }
  for (auto& v : h) v /= static_cast<double>(column.size());
  return h;
}

// Unordered multiset of column hashes, kept sorted.
struct DatasetHash {
  std::vector<ColumnHash> columns;
};

inline DatasetHash dataset_hash(const Matrix& x) {
  DatasetHash h;
  for (std::size_t j = 0; j < x.cols(); ++j) h.columns.push_back(feature_hash(x.column(j)));
  std::sort(h.columns.begin(), h.columns.end());
  return h;
}

inline bool tuples_match(const ColumnHash& a, const ColumnHash& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(std::abs(a[i] - b[i]) <= tol)) return false;
  return true;
}

// Every column tuple of `a` has a match among the columns of `b`.
inline bool covered_by(const DatasetHash& a, const DatasetHash& b, double tol) {
  for (const auto& ca : a.columns) {
    bool hit = false;
    for (const auto& cb : b.columns)
      if (tuples_match(ca, cb, tol)) {
        hit = true;
        break;
      }
    if (!hit) return false;
  }
  return !a.columns.empty();
}

// Conflict when either dataset's columns are all found in the other, so a
// column-dropped or shuffled copy still collides.
inline bool conflicts(const DatasetHash& a, const DatasetHash& b, double tol = 1e-9) {
  return covered_by(a, b, tol) || covered_by(b, a, tol);
}

// Connected components of the conflict graph, each sorted, listed by their
// smallest member; the first member is the representative kept.
inline std::vector<std::vector<std::size_t>> conflict_groups(std::span<const DatasetHash> hashes, double tol = 1e-9) {
  const std::size_t n = hashes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (conflicts(hashes[i], hashes[j], tol)) {
        const auto a = find(i), b = find(j);
        parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    if (slot[r] == n) {
      slot[r] = groups.size();
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }
  return groups;
}

struct CsvColumns {
  Matrix values;
  std::vector<std::string> names;
  std::vector<std::string> skipped;  // non-numeric columns
};

// Numeric feature columns of a headered CSV. Label columns (is_outlier, label)
// are excluded; columns with any non-numeric cell are skipped.
inline CsvColumns read_numeric_columns(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw DataError("cannot open " + p.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError(p.string() + ": empty file");
  const auto header = split_csv_line(line);
  std::vector<std::vector<std::string>> cells;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != header.size()) throw DataError(p.string() + ": ragged row");
    cells.push_back(std::move(row));
  }
  if (cells.empty()) throw DataError(p.string() + ": no data rows");
  CsvColumns out;
  std::vector<std::vector<double>> cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    std::string name = header[j];
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name == "is_outlier" || name == "label") continue;
    std::vector<double> col;
    bool numeric = true;
    for (const auto& row : cells) {
      try {
        col.push_back(parse_double(row[j]));
      } catch (const DataError&) {
        numeric = false;
        break;
      }
      if (!std::isfinite(col.back())) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      out.skipped.push_back(header[j]);
      continue;
    }
    out.names.push_back(header[j]);
    cols.push_back(std::move(col));
  }
  out.values = Matrix(cells.size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < cells.size(); ++i) out.values(i, j) = cols[j][i];
  return out;
}

}  // namespace odsynth::dedup
