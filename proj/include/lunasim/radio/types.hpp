#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lunasim::radio {

enum class Tier { ROVER, RELAY_HUB, BASE, EARTH };

// Ordered: POOR < MODERATE < HIGH, so regime comparisons read naturally.
enum class Regime { POOR = 0, MODERATE = 1, HIGH = 2 };

// Doubles as the DTN bundle priority; EMERGENCY outranks the rest.
enum class TrafficClass { EMERGENCY = 0, OPERATIONAL = 1, BULK = 2 };

const char* to_string(Tier t);
const char* to_string(Regime r);
const char* to_string(TrafficClass c);
Tier tier_from_string(const std::string& s);
TrafficClass traffic_class_from_string(const std::string& s);

struct RegimeThresholds {
  double quality_high{0.70};
  double quality_poor{0.30};
  std::uint64_t bandwidth_high_bps{1'000'000};
  std::uint64_t bandwidth_poor_bps{64'000};
  double hysteresis{0.05};
};

// Hysteresis applies to the quality axis only: the margin widens the band
// that keeps the previous regime, so a trajectory oscillating by less than
// the margin around a threshold settles after at most one transition.
// Bandwidth cuts are sharp. A down link classifies POOR via quality 0.
Regime classify_regime(double quality, std::uint64_t bandwidth_bps,
                       Regime prev, const RegimeThresholds& thr = {});

}  // namespace lunasim::radio
