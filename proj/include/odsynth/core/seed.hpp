#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace odsynth {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

// Hierarchical seed: a master seed plus an ordered list of branch indices
// (epoch, batch slot, purpose, ...). Equal paths give equal streams; the
// stream key mixes every element with its position so sibling branches and
// prefixes never collide in practice.
class SeedPath {
 public:
  SeedPath() = default;
  explicit SeedPath(std::uint64_t master) : master_(master) {}
  SeedPath(std::uint64_t master, std::vector<std::uint64_t> path)
      : master_(master), path_(std::move(path)) {}

  std::uint64_t master() const noexcept { return master_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

  SeedPath child(std::uint64_t index) const {
    SeedPath out = *this;
    out.path_.push_back(index);
    return out;
  }

  template <typename... Ts>
  SeedPath child(std::uint64_t first, Ts... rest) const {
    return child(first).child(static_cast<std::uint64_t>(rest)...);
  }

  std::uint64_t key() const noexcept {
    std::uint64_t h = splitmix64(master_ ^ 0x6a09e667f3bcc909ULL);
    for (std::size_t i = 0; i < path_.size(); ++i) {
      h = splitmix64(h ^ splitmix64(path_[i] + 0x9e3779b97f4a7c15ULL * (i + 1)));
    }
    return h;
  }

  Rng rng() const { return Rng(key()); }

  std::string to_string() const {
    std::ostringstream os;
    os << master_;
    for (auto p : path_) os << '/' << p;
    return os.str();
  }

  friend bool operator==(const SeedPath&, const SeedPath&) = default;

 private:
  std::uint64_t master_ = 0;
  std::vector<std::uint64_t> path_;
};

// Sampling helpers built only on raw engine output so results are identical
// across standard library implementations.

inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on the open interval (0, 1).
inline double uniform_open01(Rng& rng) noexcept {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Inclusive integer range.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) noexcept {
  return lo + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline bool coin(Rng& rng, double p = 0.5) noexcept { return uniform01(rng) < p; }

inline double standard_normal(Rng& rng) noexcept {
  const double u1 = uniform_open01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void shuffle(Rng& rng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  }
  idx.resize(k);
  return idx;
}

inline std::vector<std::size_t> sorted_sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  auto idx = sample_without_replacement(rng, n, k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Index drawn proportionally to non-negative weights.
inline std::size_t sample_discrete(Rng& rng, std::span<const double> probs) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (u < probs[i]) return i;
    u -= probs[i];
  }
  // Rounding fallthrough: last index with positive mass.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return probs.size() - 1;
}

}  // namespace odsynth
