#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace lunasim::sim {

// Durations and instants are integer microsecond counts. All time arithmetic
// is exact, so equal (scenario, seed) pairs replay byte-for-byte.
struct Duration {
  std::uint64_t us{0};

  constexpr auto operator<=>(const Duration&) const = default;

  constexpr Duration operator+(Duration o) const { return {us + o.us}; }
  constexpr Duration operator-(Duration o) const { return {us - o.us}; }
  constexpr double seconds() const { return static_cast<double>(us) / 1e6; }
};

constexpr Duration micros(std::uint64_t v) { return {v}; }
constexpr Duration millis(std::uint64_t v) { return {v * 1000}; }
constexpr Duration secs(std::uint64_t v) { return {v * 1'000'000}; }

inline Duration duration_from_seconds(double s) {
  return {static_cast<std::uint64_t>(std::llround(s * 1e6))};
}

// Instant on the simulated clock, measured from epoch 0.
struct SimTime {
  std::uint64_t us{0};

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(Duration d) const { return {us + d.us}; }
  constexpr double seconds() const { return static_cast<double>(us) / 1e6; }

  // Elapsed time since `earlier`; callers guarantee earlier <= *this.
  constexpr Duration since(SimTime earlier) const { return {us - earlier.us}; }
};

constexpr SimTime at_secs(std::uint64_t s) { return {s * 1'000'000}; }
constexpr SimTime at_micros(std::uint64_t u) { return {u}; }

}  // namespace lunasim::sim
