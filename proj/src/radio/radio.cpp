#include "lunasim/radio/radio.hpp"

#include <algorithm>
#include <cmath>

namespace lunasim::radio {

void RadioEnvironment::add_node(const std::string& name, Tier tier) {
  if (nodes_.count(name))
    throw std::invalid_argument("duplicate node: " + name);
  nodes_[name] = Node{tier, std::nullopt};
}

void RadioEnvironment::add_link(const std::string& a, const std::string& b,
                                const LinkConfig& cfg) {
  if (!has_node(a) || !has_node(b))
    throw std::invalid_argument("link references unknown node: " + a + "-" +
                                b);
  if (a == b) throw std::invalid_argument("self-link: " + a);
  if (cfg.bandwidth_bps == 0)
    throw std::invalid_argument("zero bandwidth on link " + a + "-" + b);
  auto k = key(a, b);
  if (links_.count(k)) throw std::invalid_argument("duplicate link " + k);
  Link l;
  l.cfg = cfg;
  links_.emplace(std::move(k), std::move(l));
}

void RadioEnvironment::add_occlusion(const std::string& a,
                                     const std::string& b, sim::SimTime start,
                                     sim::SimTime end) {
  Link& l = link_ref(a, b);
  if (start >= end)
    throw std::invalid_argument("empty occlusion window on " + key(a, b));
  Occlusion w{start.us, end.us};
  auto pos = std::lower_bound(
      l.occlusions.begin(), l.occlusions.end(), w,
      [](const Occlusion& x, const Occlusion& y) { return x.start_us < y.start_us; });
  if (pos != l.occlusions.end() && w.end_us > pos->start_us)
    throw std::invalid_argument("overlapping occlusion windows on " + key(a, b));
  if (pos != l.occlusions.begin() && std::prev(pos)->end_us > w.start_us)
    throw std::invalid_argument("overlapping occlusion windows on " + key(a, b));
  l.occlusions.insert(pos, w);
}

void RadioEnvironment::script_halt(const std::string& node, sim::SimTime at) {
  auto it = nodes_.find(node);
  if (it == nodes_.end())
    throw std::invalid_argument("halt of unknown node: " + node);
  it->second.halt_at_us = at.us;
}

bool RadioEnvironment::has_node(const std::string& name) const {
  return nodes_.count(name) > 0;
}

Tier RadioEnvironment::tier_of(const std::string& name) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) throw std::invalid_argument("unknown node: " + name);
  return it->second.tier;
}

bool RadioEnvironment::is_halted(const std::string& node,
                                 sim::SimTime t) const {
  auto it = nodes_.find(node);
  if (it == nodes_.end()) throw std::invalid_argument("unknown node: " + node);
  return it->second.halt_at_us && t.us >= *it->second.halt_at_us;
}

std::vector<std::string> RadioEnvironment::nodes() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : nodes_) out.push_back(name);
  return out;
}

std::vector<std::string> RadioEnvironment::neighbors(
    const std::string& node) const {
  std::vector<std::string> out;
  for (const auto& [k, _] : links_) {
    auto bar = k.find('|');
    std::string a = k.substr(0, bar), b = k.substr(bar + 1);
    if (a == node) out.push_back(b);
    if (b == node) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::string, std::string>> RadioEnvironment::links()
    const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, _] : links_) {
    auto bar = k.find('|');
    out.emplace_back(k.substr(0, bar), k.substr(bar + 1));
  }
  return out;
}

const RadioEnvironment::Link& RadioEnvironment::link_ref(
    const std::string& a, const std::string& b) const {
  auto it = links_.find(key(a, b));
  if (it == links_.end()) throw UnknownLink("no link " + a + "-" + b);
  return it->second;
}

RadioEnvironment::Link& RadioEnvironment::link_ref(const std::string& a,
                                                   const std::string& b) {
  auto it = links_.find(key(a, b));
  if (it == links_.end()) throw UnknownLink("no link " + a + "-" + b);
  return it->second;
}

bool RadioEnvironment::earth_link(const std::string& a,
                                  const std::string& b) const {
  return tier_of(a) == Tier::EARTH || tier_of(b) == Tier::EARTH;
}

LinkState RadioEnvironment::link_at(const std::string& a, const std::string& b,
                                    sim::SimTime t) const {
  const Link& l = link_ref(a, b);
  bool occluded = false;
  for (const auto& w : l.occlusions) {
    if (t.us >= w.start_us && t.us < w.end_us) {
      occluded = true;
      break;
    }
    if (w.start_us > t.us) break;
  }
  bool up = !occluded && !is_halted(a, t) && !is_halted(b, t);
  return LinkState{up, l.cfg.bandwidth_bps, l.cfg.one_way_delay,
                   l.cfg.quality};
}

bool RadioEnvironment::is_up(const std::string& a, const std::string& b,
                             sim::SimTime t) const {
  return link_at(a, b, t).up;
}

std::uint32_t RadioEnvironment::mtu(const std::string& a,
                                    const std::string& b) const {
  return link_ref(a, b).cfg.mtu;
}

std::uint64_t RadioEnvironment::effective_bandwidth_bps(
    const std::string& a, const std::string& b) const {
  const Link& l = link_ref(a, b);
  if (!l.steered) return l.cfg.bandwidth_bps;
  return static_cast<std::uint64_t>(
      std::llround(static_cast<double>(l.cfg.bandwidth_bps) * steering_bonus_));
}

TransmitResult RadioEnvironment::transmit(const std::string& src,
                                          const std::string& dst,
                                          std::uint64_t size_bytes,
                                          TrafficClass cls, sim::SimTime t) {
  return transmit_impl(src, dst, size_bytes, cls, t, /*commit=*/true);
}

TransmitResult RadioEnvironment::peek_transmit(const std::string& src,
                                               const std::string& dst,
                                               std::uint64_t size_bytes,
                                               TrafficClass cls,
                                               sim::SimTime t) const {
  return const_cast<RadioEnvironment*>(this)->transmit_impl(
      src, dst, size_bytes, cls, t, /*commit=*/false);
}

TransmitResult RadioEnvironment::transmit_impl(const std::string& src,
                                               const std::string& dst,
                                               std::uint64_t size_bytes,
                                               TrafficClass cls, sim::SimTime t,
                                               bool commit) {
  Link& l = link_ref(src, dst);
  if (!is_up(src, dst, t))
    throw LinkDown("link " + key(src, dst) + " down at t=" +
                   std::to_string(t.us) + "us");
  if (size_bytes > l.cfg.mtu)
    throw PayloadExceedsMtu("payload " + std::to_string(size_bytes) +
                            " B exceeds mtu " + std::to_string(l.cfg.mtu) +
                            " on " + key(src, dst));

  std::uint64_t bw = effective_bandwidth_bps(src, dst);
  std::uint64_t bits = size_bytes * 8;
  std::uint64_t start, tx_us = 0;
  if (l.policy) {
    start = std::max(t.us, l.class_busy_us[static_cast<int>(cls)]);
    if (bits > 0) {
      double rate = static_cast<double>(bw) * l.policy->share(cls);
      if (rate <= 0.0)
        throw LinkDown("class " + std::string(to_string(cls)) +
                       " has zero spectrum share on " + key(src, dst));
      tx_us = static_cast<std::uint64_t>(
          std::ceil(static_cast<double>(bits) * 1e6 / rate));
    }
  } else {
    start = std::max(t.us, l.busy_until_us);
    if (bits > 0) tx_us = (bits * 1'000'000 + bw - 1) / bw;
  }
  std::uint64_t finish = start + tx_us;

  sim::Duration delay = l.cfg.one_way_delay;
  if (commit) {
    if (l.policy) {
      l.class_busy_us[static_cast<int>(cls)] = finish;
    } else {
      l.busy_until_us = finish;
    }
    if (earth_link(src, dst)) {
      delay = sim::micros(engine_.rng("radio.earth_delay")
                              .uniform_int(earth_delay_lo_.us,
                                           earth_delay_hi_.us));
    }
  }
  return TransmitResult{sim::at_micros(start), sim::at_micros(finish),
                        sim::at_micros(finish) + delay};
}

Prediction RadioEnvironment::predict_quality(const std::string& a,
                                             const std::string& b,
                                             sim::SimTime t_future) const {
  const Link& l = link_ref(a, b);
  sim::SimTime now = engine_.now();
  if (t_future < now)
    throw std::logic_error("predict_quality into the past");
  double est = link_at(a, b, t_future).up ? l.cfg.quality : 0.0;
  if (prediction_noise_amp_ > 0.0) {
    est += engine_.rng("radio.predict")
               .uniform(-prediction_noise_amp_, prediction_noise_amp_);
    est = std::clamp(est, 0.0, 1.0);
  }
  double horizon_s = t_future.since(now).seconds();
  return Prediction{est, ci_per_second_ * horizon_s};
}

std::vector<Interval> RadioEnvironment::up_intervals(const std::string& a,
                                                     const std::string& b,
                                                     sim::SimTime from,
                                                     sim::SimTime to) const {
  const Link& l = link_ref(a, b);
  std::uint64_t lo = from.us, hi = to.us;
  // A halted endpoint keeps the link down forever after.
  for (const std::string& n : {a, b}) {
    const Node& node = nodes_.at(n);
    if (node.halt_at_us) hi = std::min(hi, *node.halt_at_us);
  }
  std::vector<Interval> out;
  if (lo >= hi) return out;
  std::uint64_t cur = lo;
  for (const auto& w : l.occlusions) {
    if (w.end_us <= cur) continue;
    if (w.start_us >= hi) break;
    if (w.start_us > cur)
      out.push_back({sim::at_micros(cur), sim::at_micros(w.start_us)});
    cur = std::max(cur, std::min(w.end_us, hi));
  }
  if (cur < hi) out.push_back({sim::at_micros(cur), sim::at_micros(hi)});
  return out;
}

void RadioEnvironment::set_policy(const std::string& a, const std::string& b,
                                  const SpectrumPolicy& policy) {
  double sum = policy.emergency + policy.operational + policy.bulk;
  if (policy.emergency < 0 || policy.operational < 0 || policy.bulk < 0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("spectrum shares must be >= 0 and sum to 1");
  Link& l = link_ref(a, b);
  if (!l.policy) {
    // Class chains start no earlier than the tail of the full-rate chain.
    for (auto& c : l.class_busy_us) c = std::max(c, l.busy_until_us);
  }
  l.policy = policy;
}

void RadioEnvironment::clear_policy(const std::string& a,
                                    const std::string& b) {
  Link& l = link_ref(a, b);
  if (l.policy) {
    for (auto c : l.class_busy_us)
      l.busy_until_us = std::max(l.busy_until_us, c);
  }
  l.policy.reset();
}

std::optional<SpectrumPolicy> RadioEnvironment::active_policy(
    const std::string& a, const std::string& b) const {
  return link_ref(a, b).policy;
}

SpectrumPolicy RadioEnvironment::baseline_shares(const std::string& a,
                                                 const std::string& b) const {
  return link_ref(a, b).baseline;
}

void RadioEnvironment::set_baseline_shares(const std::string& a,
                                           const std::string& b,
                                           const SpectrumPolicy& shares) {
  double sum = shares.emergency + shares.operational + shares.bulk;
  if (shares.emergency < 0 || shares.operational < 0 || shares.bulk < 0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("spectrum shares must be >= 0 and sum to 1");
  link_ref(a, b).baseline = shares;
}

void RadioEnvironment::set_steering(const std::string& asset,
                                    const std::string& neighbor) {
  Link& target = link_ref(asset, neighbor);
  for (auto& [k, l] : links_) {
    auto bar = k.find('|');
    if (k.substr(0, bar) == asset || k.substr(bar + 1) == asset)
      l.steered = false;
  }
  target.steered = true;
}

void RadioEnvironment::set_quality(const std::string& a, const std::string& b,
                                   double q) {
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("quality must lie in [0, 1]");
  link_ref(a, b).cfg.quality = q;
}

}  // namespace lunasim::radio
