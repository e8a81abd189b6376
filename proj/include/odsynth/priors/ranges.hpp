#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "odsynth/core/error.hpp"
#include "odsynth/core/seed.hpp"

namespace odsynth {

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::int64_t draw(Rng& rng) const { return uniform_int(rng, lo, hi); }
  bool within(std::int64_t a, std::int64_t b) const { return lo >= a && hi <= b && lo <= hi; }
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;

  double draw(Rng& rng) const { return uniform(rng, lo, hi); }
  bool within(double a, double b) const { return lo >= a && hi <= b && lo <= hi; }
  friend bool operator==(const RealRange&, const RealRange&) = default;
};

inline void require_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("range out of bounds: " + what);
}

inline nlohmann::json to_json(const IntRange& r) { return nlohmann::json::array({r.lo, r.hi}); }
inline nlohmann::json to_json(const RealRange& r) { return nlohmann::json::array({r.lo, r.hi}); }

}  // namespace odsynth
