#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "odsynth/core/error.hpp"
#include "odsynth/core/matrix.hpp"
#include "odsynth/core/seed.hpp"

namespace odsynth {

enum class PaddingMode { rescale_pad, subsample };

struct PaddingPolicy {
  std::size_t target_dim = 100;
  PaddingMode mode = PaddingMode::rescale_pad;
};

// Feature columns kept when d > D: sorted, drawn without replacement.
inline std::vector<std::size_t> padding_column_subset(std::size_t d, std::size_t target_dim, const SeedPath& seed) {
  Rng rng = seed.rng();
  return sorted_sample_without_replacement(rng, d, target_dim);
}

// Maps a length-d vector to length D: scale by D/d and zero-pad when d < D,
// identity when d == D, and a seeded column subsample when d > D.
inline std::vector<double> pad_and_rescale(std::span<const double> x, std::size_t target_dim, const SeedPath& seed) {
  const std::size_t d = x.size();
  if (d == 0 || target_dim == 0) throw DomainError("pad_and_rescale requires d >= 1 and D >= 1");
  for (double v : x)
    if (!std::isfinite(v)) throw DataError("pad_and_rescale: rejected input with non-finite entry");

  if (d == target_dim) return {x.begin(), x.end()};
  std::vector<double> out(target_dim, 0.0);
  if (d < target_dim) {
    const double factor = static_cast<double>(target_dim) / static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) out[j] = factor * x[j];
    return out;
  }
  const auto cols = padding_column_subset(d, target_dim, seed);
  for (std::size_t j = 0; j < target_dim; ++j) out[j] = x[cols[j]];
  return out;
}

// Row-wise version; every row shares one column subset so a dataset keeps
// consistent features.
inline Matrix pad_and_rescale(const Matrix& x, std::size_t target_dim, const SeedPath& seed) {
  if (x.cols() == 0 || target_dim == 0) throw DomainError("pad_and_rescale requires d >= 1 and D >= 1");
  const std::size_t d = x.cols();
  for (double v : x.values())
    if (!std::isfinite(v)) throw DataError("pad_and_rescale: rejected input with non-finite entry");
  if (d == target_dim) return x;
  if (d > target_dim) return x.select_cols(padding_column_subset(d, target_dim, seed));
  Matrix out(x.rows(), target_dim, 0.0);
  const double factor = static_cast<double>(target_dim) / static_cast<double>(d);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < d; ++j) out(r, j) = factor * x(r, j);
  return out;
}

}  // namespace odsynth
