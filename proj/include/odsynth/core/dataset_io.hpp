#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odsynth/core/dataset.hpp"
#include "odsynth/core/error.hpp"

namespace odsynth {

// Dataset files: `<stem>.csv` with header `f0,...,f{d-1},is_outlier` and
// 17-significant-digit values, plus `<stem>.meta.json` next to it.

inline std::filesystem::path meta_path_for(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

inline std::string format_double(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s) {
  // strtod handles the full %.17g output including exponents.
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw DataError("malformed numeric value '" + s + "'");
  return v;
}

inline void write_dataset(const LabeledDataset& ds, const std::filesystem::path& csv_path) {
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  std::ofstream os(csv_path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + csv_path.string() + "' for writing");
  for (std::size_t j = 0; j < ds.dim(); ++j) os << 'f' << j << ',';
  os << "is_outlier\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features().row(i)) os << format_double(v) << ',';
    os << (ds.labels()[i] == Label::outlier ? '1' : '0') << '\n';
  }
  if (!os) throw DataError("write failed for '" + csv_path.string() + "'");

  std::ofstream ms(meta_path_for(csv_path), std::ios::binary);
  if (!ms) throw DataError("cannot open metadata sidecar for writing");
  ms << to_json(ds.meta()).dump(2) << '\n';
}

inline LabeledDataset read_dataset(const std::filesystem::path& csv_path) {
  std::ifstream is(csv_path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + csv_path.string() + "'");
  std::string line;
  if (!std::getline(is, line)) throw DataError("malformed header: empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "is_outlier") throw DataError("malformed header: missing is_outlier");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j)) throw DataError("malformed header: expected f" + std::to_string(j));
  }

  Matrix x;
  std::vector<Label> y;
  std::vector<double> row(d);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != d + 1)
      throw DataError("inconsistent row width at line " + std::to_string(line_no));
    for (std::size_t j = 0; j < d; ++j) row[j] = parse_double(cells[j]);
    x.append_row(row);
    if (cells.back() == "0") {
      y.push_back(Label::inlier);
    } else if (cells.back() == "1") {
      y.push_back(Label::outlier);
    } else {
      throw DataError("unknown label token '" + cells.back() + "' at line " + std::to_string(line_no));
    }
  }

  DatasetMeta meta;
  const auto mp = meta_path_for(csv_path);
  if (std::filesystem::exists(mp)) {
    std::ifstream ms(mp);
    nlohmann::json j;
    try {
      ms >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed metadata sidecar: ") + e.what());
    }
    meta = meta_from_json(j);
  }
  return LabeledDataset(std::move(x), std::move(y), std::move(meta));
}

// ADBench-style CSV: arbitrary header, numeric features, final 0/1 label column.
inline LabeledDataset read_external_csv(const std::filesystem::path& csv_path) {
  std::ifstream is(csv_path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + csv_path.string() + "'");
  std::string line;
  if (!std::getline(is, line)) throw DataError("malformed header: empty file");
  const std::size_t width = split_csv_line(line).size();
  if (width < 2) throw DataError("malformed header: need features and a label column");
  Matrix x;
  std::vector<Label> y;
  std::vector<double> row(width - 1);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width) throw DataError("inconsistent row width at line " + std::to_string(line_no));
    for (std::size_t j = 0; j + 1 < width; ++j) row[j] = parse_double(cells[j]);
    x.append_row(row);
    const double lab = parse_double(cells.back());
    if (lab == 0.0) {
      y.push_back(Label::inlier);
    } else if (lab == 1.0) {
      y.push_back(Label::outlier);
    } else {
      throw DataError("unknown label token '" + cells.back() + "' at line " + std::to_string(line_no));
    }
  }
  DatasetMeta meta;
  meta.prior = PriorKind::external;
  return LabeledDataset(std::move(x), std::move(y), std::move(meta));
}

}  // namespace odsynth
