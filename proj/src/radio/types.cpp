#include "lunasim/radio/types.hpp"

namespace lunasim::radio {

const char* to_string(Tier t) {
  switch (t) {
    case Tier::ROVER: return "ROVER";
    case Tier::RELAY_HUB: return "RELAY_HUB";
    case Tier::BASE: return "BASE";
    case Tier::EARTH: return "EARTH";
  }
  return "?";
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::POOR: return "POOR";
    case Regime::MODERATE: return "MODERATE";
    case Regime::HIGH: return "HIGH";
  }
  return "?";
}

const char* to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::EMERGENCY: return "EMERGENCY";
    case TrafficClass::OPERATIONAL: return "OPERATIONAL";
    case TrafficClass::BULK: return "BULK";
  }
  return "?";
}

Tier tier_from_string(const std::string& s) {
  if (s == "ROVER") return Tier::ROVER;
  if (s == "RELAY_HUB") return Tier::RELAY_HUB;
  if (s == "BASE") return Tier::BASE;
  if (s == "EARTH") return Tier::EARTH;
  throw std::invalid_argument("unknown tier: " + s);
}

TrafficClass traffic_class_from_string(const std::string& s) {
  if (s == "EMERGENCY") return TrafficClass::EMERGENCY;
  if (s == "OPERATIONAL") return TrafficClass::OPERATIONAL;
  if (s == "BULK") return TrafficClass::BULK;
  throw std::invalid_argument("unknown traffic class: " + s);
}

Regime classify_regime(double quality, std::uint64_t bandwidth_bps,
                       Regime prev, const RegimeThresholds& thr) {
  // Leaving the previous regime requires crossing the boundary threshold by
  // the margin, so each threshold carries a +/-margin dead band: HIGH holds
  // down to 0.65 once entered but is entered only at 0.75, and symmetrically
  // for POOR. Inside a dead band the previous classification persists, which
  // bounds any small oscillation to at most one transition.
  double t_high = (prev == Regime::HIGH) ? thr.quality_high - thr.hysteresis
                                         : thr.quality_high + thr.hysteresis;
  double t_poor = (prev == Regime::POOR) ? thr.quality_poor + thr.hysteresis
                                         : thr.quality_poor - thr.hysteresis;
  if (quality >= t_high && bandwidth_bps >= thr.bandwidth_high_bps)
    return Regime::HIGH;
  if (quality < t_poor || bandwidth_bps < thr.bandwidth_poor_bps)
    return Regime::POOR;
  return Regime::MODERATE;
}

}  // namespace lunasim::radio
