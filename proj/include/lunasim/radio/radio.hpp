#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lunasim/radio/types.hpp"
#include "lunasim/sim/engine.hpp"
#include "lunasim/sim/time.hpp"

namespace lunasim::radio {

struct UnknownLink : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LinkDown : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PayloadExceedsMtu : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LinkConfig {
  std::uint64_t bandwidth_bps{0};
  sim::Duration one_way_delay{};
  double quality{1.0};
  std::uint32_t mtu{65'536};
};

struct LinkState {
  bool up{false};
  std::uint64_t bandwidth_bps{0};
  sim::Duration one_way_delay{};
  double quality{0.0};
};

// Per-class capacity shares on one link; weights sum to 1.
struct SpectrumPolicy {
  double emergency{0.2};
  double operational{0.5};
  double bulk{0.3};

  double share(TrafficClass c) const {
    switch (c) {
      case TrafficClass::EMERGENCY: return emergency;
      case TrafficClass::OPERATIONAL: return operational;
      case TrafficClass::BULK: return bulk;
    }
    return 0.0;
  }

  std::uint64_t effective_bps(TrafficClass c, std::uint64_t link_bw) const {
    return static_cast<std::uint64_t>(share(c) * static_cast<double>(link_bw));
  }
};

struct TransmitResult {
  sim::SimTime started;  // serialization start (after any queueing)
  sim::SimTime sent;     // last bit leaves the sender
  sim::SimTime arrival;  // last bit reaches the receiver
};

struct Prediction {
  double estimate{0.0};
  double confidence_interval{0.0};
};

struct Interval {
  sim::SimTime start;
  sim::SimTime end;  // half-open [start, end)
};

// Time-varying link model: baseline per-link state, occlusion windows,
// scripted node halts, per-link FIFO serialization, spectrum policies, and
// steering bonuses. Owned by one engine; link_at and friends are pure reads.
class RadioEnvironment {
 public:
  explicit RadioEnvironment(sim::Engine& engine) : engine_(engine) {}

  void add_node(const std::string& name, Tier tier);
  void add_link(const std::string& a, const std::string& b,
                const LinkConfig& cfg);
  // Half-open occlusion [start, end); windows per link must not overlap.
  void add_occlusion(const std::string& a, const std::string& b,
                     sim::SimTime start, sim::SimTime end);
  // Node is down from `at` onward. Halts are part of the contact plan:
  // routing may avoid the node before the halt takes effect.
  void script_halt(const std::string& node, sim::SimTime at);

  bool has_node(const std::string& name) const;
  Tier tier_of(const std::string& name) const;
  bool is_halted(const std::string& node, sim::SimTime t) const;
  std::vector<std::string> nodes() const;
  std::vector<std::string> neighbors(const std::string& node) const;
  std::vector<std::pair<std::string, std::string>> links() const;

  // Baseline state with up=false during occlusions or endpoint halts.
  // Pure function of the contact plan and t.
  LinkState link_at(const std::string& a, const std::string& b,
                    sim::SimTime t) const;
  bool is_up(const std::string& a, const std::string& b, sim::SimTime t) const;
  std::uint32_t mtu(const std::string& a, const std::string& b) const;

  // Baseline bandwidth with the steering bonus applied when this link is
  // the steered one for either endpoint.
  std::uint64_t effective_bandwidth_bps(const std::string& a,
                                        const std::string& b) const;

  // No active policy: one FIFO chain across both directions at full link
  // rate. Active policy: per-class chains at share * bandwidth (hard
  // partition, so concurrent class rates can never exceed capacity). Earth
  // links draw their one-way delay from the radio RNG stream per send.
  TransmitResult transmit(const std::string& src, const std::string& dst,
                          std::uint64_t size_bytes, TrafficClass cls,
                          sim::SimTime t);
  // Same arithmetic, no commitment, no RNG draw (nominal delay).
  TransmitResult peek_transmit(const std::string& src, const std::string& dst,
                               std::uint64_t size_bytes, TrafficClass cls,
                               sim::SimTime t) const;

  // Plan-accurate estimate plus additive uniform noise of the configured
  // amplitude (no RNG draw when the amplitude is 0). Interval width grows
  // linearly with the horizon measured from now.
  Prediction predict_quality(const std::string& a, const std::string& b,
                             sim::SimTime t_future) const;

  // Maximal up-intervals of the link intersected with [from, to).
  std::vector<Interval> up_intervals(const std::string& a,
                                     const std::string& b, sim::SimTime from,
                                     sim::SimTime to) const;

  void set_policy(const std::string& a, const std::string& b,
                  const SpectrumPolicy& policy);
  void clear_policy(const std::string& a, const std::string& b);
  std::optional<SpectrumPolicy> active_policy(const std::string& a,
                                              const std::string& b) const;
  SpectrumPolicy baseline_shares(const std::string& a,
                                 const std::string& b) const;
  void set_baseline_shares(const std::string& a, const std::string& b,
                           const SpectrumPolicy& shares);

  // Steers `asset` toward `neighbor`: that link gains the bandwidth bonus,
  // any previously steered link of `asset` loses it.
  void set_steering(const std::string& asset, const std::string& neighbor);

  // Scripted baseline change (terrain, interference); takes effect for all
  // reads from the current instant on.
  void set_quality(const std::string& a, const std::string& b, double q);

  void set_prediction_noise(double amplitude, double ci_per_second) {
    prediction_noise_amp_ = amplitude;
    ci_per_second_ = ci_per_second;
  }
  void set_earth_delay_range(sim::Duration lo, sim::Duration hi) {
    earth_delay_lo_ = lo;
    earth_delay_hi_ = hi;
  }
  void set_steering_bonus(double factor) { steering_bonus_ = factor; }

 private:
  struct Occlusion {
    std::uint64_t start_us;
    std::uint64_t end_us;
  };
  struct Link {
    LinkConfig cfg;
    std::vector<Occlusion> occlusions;  // sorted, non-overlapping
    SpectrumPolicy baseline;
    std::optional<SpectrumPolicy> policy;
    bool steered{false};
    std::uint64_t busy_until_us{0};
    // Under an active policy the link is hard-partitioned: each class
    // serializes on its own chain at share * bandwidth.
    std::uint64_t class_busy_us[3]{0, 0, 0};
  };
  struct Node {
    Tier tier;
    std::optional<std::uint64_t> halt_at_us;
  };

  static std::string key(const std::string& a, const std::string& b) {
    return a < b ? a + "|" + b : b + "|" + a;
  }
  const Link& link_ref(const std::string& a, const std::string& b) const;
  Link& link_ref(const std::string& a, const std::string& b);
  bool earth_link(const std::string& a, const std::string& b) const;
  TransmitResult transmit_impl(const std::string& src, const std::string& dst,
                               std::uint64_t size_bytes, TrafficClass cls,
                               sim::SimTime t, bool commit);

  sim::Engine& engine_;
  std::map<std::string, Node> nodes_;
  std::map<std::string, Link> links_;
  double prediction_noise_amp_{0.0};
  double ci_per_second_{0.01};
  double steering_bonus_{1.2};
  sim::Duration earth_delay_lo_{sim::micros(750'000)};
  sim::Duration earth_delay_hi_{sim::micros(1'000'000)};
};

}  // namespace lunasim::radio
