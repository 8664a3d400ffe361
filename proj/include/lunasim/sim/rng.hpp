#pragma once

#include <cstdint>
#include <string_view>

#include "lunasim/sim/hash.hpp"

namespace lunasim::sim {

// Deterministic per-component random stream. splitmix64 core with explicit
// bit mappings; std:: distributions are not reproducible across standard
// library implementations, so the double/int mappings are done by hand.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Stream for `component` under `master` seed. Distinct component names give
  // independent streams; draws on one never perturb another.
  static Rng stream(std::uint64_t master, std::string_view component) {
    std::uint64_t s = master ^ fnv1a64(component);
    // One scramble round so master=0 components do not start at raw fnv.
    return Rng(splitmix64(s));
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1); 53 mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [lo, hi], both ends inclusive. Rejection-free modulo
  // is fine here: ranges are tiny relative to 2^64, bias is unobservable.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    return lo + next_u64() % (hi - lo + 1);
  }

 private:
  std::uint64_t state_{0};
};

}  // namespace lunasim::sim
