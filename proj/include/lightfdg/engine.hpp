#pragma once

// Flow-level discrete-event simulation of one scenario under one forwarding
// policy.
//
// Flows are fluids. Every resource a flow crosses (host NIC, lightpath, ECMP
// link or ECMP-FSO wavelength) has a capacity, and rates are the max-min
// fair allocation over all of them, recomputed whenever the set of flows or
// routes changes. Between events every rate is constant, so completions and
// ACK instants are solved exactly.
//
// Policies:
//   ecmp      5-tuple hash picks the spine; cabled links at a fraction of the
//             FSO rate.
//   ecmp-fso  same hash, but a flow holds one whole wavelength (link_rate/W)
//             on both hops; flows that find none wait in FIFO order.
//   fg-fso    flows go straight to their true class's R2R lightpath.
//   lightfdg  flows start on the MF lightpath; the detector sees an ACK per
//             byte quantum and a newly classified EF moves to the EF
//             lightpath at its classification instant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lightfdg/detection.hpp"
#include "lightfdg/errors.hpp"
#include "lightfdg/grooming.hpp"
#include "lightfdg/provisioning.hpp"
#include "lightfdg/scenario.hpp"
#include "lightfdg/traffic.hpp"
#include "lightfdg/types.hpp"

namespace lightfdg {

enum class Policy { Ecmp, EcmpFso, FgFso, LightFdg };

inline constexpr Policy kAllPolicies[] = {Policy::Ecmp, Policy::EcmpFso, Policy::FgFso, Policy::LightFdg};

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::Ecmp: return "ecmp";
    case Policy::EcmpFso: return "ecmp-fso";
    case Policy::FgFso: return "fg-fso";
    case Policy::LightFdg: return "lightfdg";
  }
  return "?";
}

inline Policy parse_policy(std::string_view s) {
  for (Policy p : kAllPolicies) {
    if (s == to_string(p)) return p;
  }
  throw ConfigError("unknown policy '" + std::string(s) + "' (valid: ecmp, ecmp-fso, fg-fso, lightfdg)");
}

inline bool uses_lightpaths(Policy p) { return p == Policy::FgFso || p == Policy::LightFdg; }

// FNV-1a over the 5-tuple bytes, finished with splitmix64 so that the low
// bits used by the modulo are well mixed.
inline std::size_t ecmp_route(const FlowKey& k, std::size_t count) {
  if (count < 1) throw ContractError("ECMP needs at least one candidate path");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(k.src, 4);
  mix(k.dst, 4);
  mix(k.sport, 2);
  mix(k.dport, 2);
  mix(k.proto, 1);
  return static_cast<std::size_t>(splitmix64(h) % count);
}

// R2R demands from grooming the ground-truth classes. Pairs that carry
// traffic get both class lightpaths: the per-class override if configured,
// otherwise C = Lambda F / tau with F the mean class size, floored at
// min_bps when the pair has no flow of that class.
inline DemandMatrix scenario_demands(const ScenarioConfig& sc, std::span<const FlowDescriptor> flows) {
  const RackMap racks = sc.racks();
  const auto groomed = groom_three_step(flows, racks);
  auto mean_bits = [](const SizeRange& r) { return 8.0 * (static_cast<double>(r.min) + static_cast<double>(r.max)) / 2.0; };
  DemandMatrix m = demand_matrix_from_aggregates(groomed.r2r, racks.racks, mean_bits(sc.traffic.mice_size),
                                                 sc.demand.mice_deadline_s, mean_bits(sc.traffic.elephant_size),
                                                 sc.demand.elephant_deadline_s);
  std::set<std::pair<int, int>> pairs;
  for (const auto& a : groomed.r2r) pairs.insert({a.src, a.dst});
  for (const auto& [i, j] : pairs) {
    for (FlowClass cls : kProvisionedClasses) {
      const auto& override_bps = cls == FlowClass::Mice ? sc.demand.mice_bps : sc.demand.elephant_bps;
      if (override_bps) {
        m.set_capacity_override(i, j, cls, *override_bps);
      } else if (!(m.capacity_bps(i, j, cls) > 0.0)) {
        m.set_capacity_override(i, j, cls, sc.demand.min_bps);
      }
    }
  }
  return m;
}

struct SimulationSetup {
  Policy policy = Policy::LightFdg;
  RackMap racks{2, 1};
  int spines = 1;
  int wavelengths = 4;
  double link_rate_bps = 10e9;
  NetworkConfig network;
  DetectorConfig detector;
  double mice_deadline_s = 1e-3;
  double elephant_deadline_s = 1.0;
  const ProvisioningResult* provisioning = nullptr;
  std::uint64_t seed = 0;  // initial sequence numbers seen by the detector
};

struct FlowResult {
  FlowId id = 0;
  FlowKey key;
  FlowClass truth = FlowClass::Mice;
  FlowClass detected = FlowClass::Unknown;
  std::uint64_t size_bytes = 0;
  std::int64_t start_ns = 0;
  std::int64_t finish_ns = 0;
  std::int64_t fct_ns = 0;
  bool deadline_met = false;
  std::optional<std::int64_t> detect_ns;
  std::int64_t wait_ns = 0;               // ECMP-FSO queueing before the first byte
  std::uint64_t bytes_on_mice_path = 0;   // lightfdg: bytes sent before the reroute
  bool rerouted = false;
};

struct ClassSummary {
  FlowClass cls = FlowClass::Mice;
  std::size_t flows = 0;
  std::uint64_t bytes = 0;
  std::int64_t first_start_ns = 0;
  std::int64_t last_finish_ns = 0;
  double throughput_bps = 0.0;
  double mean_fct_ns = 0.0;
  std::size_t deadline_met = 0;
  double deadline_satisfaction = 1.0;  // vacuously 1 without flows
};

struct MetricsReport {
  Policy policy = Policy::LightFdg;
  std::uint64_t seed = 0;
  std::vector<FlowResult> flows;  // by flow id
  ClassSummary mice;
  ClassSummary elephant;
  std::optional<DetectionMetrics> detection;
  std::uint64_t events = 0;
  std::size_t lightpaths = 0;
};

// Per-class throughput over the class makespan, mean FCT and deadline
// satisfaction (MF against the MF deadline, EF against the EF deadline).
inline void collect_metrics(MetricsReport& report) {
  for (FlowClass cls : kProvisionedClasses) {
    ClassSummary s;
    s.cls = cls;
    double fct_sum = 0.0;
    bool first = true;
    for (const auto& f : report.flows) {
      if (f.truth != cls) continue;
      ++s.flows;
      s.bytes += f.size_bytes;
      fct_sum += static_cast<double>(f.fct_ns);
      if (f.deadline_met) ++s.deadline_met;
      s.first_start_ns = first ? f.start_ns : std::min(s.first_start_ns, f.start_ns);
      s.last_finish_ns = first ? f.finish_ns : std::max(s.last_finish_ns, f.finish_ns);
      first = false;
    }
    if (s.flows > 0) {
      s.mean_fct_ns = fct_sum / static_cast<double>(s.flows);
      s.deadline_satisfaction = static_cast<double>(s.deadline_met) / static_cast<double>(s.flows);
      const double makespan_s = static_cast<double>(s.last_finish_ns - s.first_start_ns) * 1e-9;
      s.throughput_bps = makespan_s > 0.0 ? static_cast<double>(s.bytes) * 8.0 / makespan_s
                                          : std::numeric_limits<double>::infinity();
    }
    (cls == FlowClass::Mice ? report.mice : report.elephant) = s;
  }
}

namespace detail {

class FlowSimulator {
 public:
  FlowSimulator(const SimulationSetup& setup, std::span<const FlowDescriptor> flows)
      : setup_(setup), flows_(flows.begin(), flows.end()), detector_(setup.detector) {
    if (setup_.racks.racks < 1 || setup_.spines < 1 || setup_.wavelengths < 1) {
      throw ContractError("simulation needs at least one rack, spine and wavelength");
    }
    if (uses_lightpaths(setup_.policy) && setup_.provisioning == nullptr) {
      throw ContractError("lightpath policies need a provisioning result");
    }
    build_resources();
    state_.resize(flows_.size());
    for (std::size_t i = 0; i < flows_.size(); ++i) {
      state_[i].key = flow_key(flows_[i], setup_.racks);
      state_[i].arrival_ns = flows_[i].arrival_s * 1e9;
      std::tie(state_[i].client_isn, state_[i].server_isn) = flow_isns(setup_.seed, flows_[i].id);
      state_[i].next_quantum = setup_.network.ack_quantum_bytes;
    }
    order_.resize(flows_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(state_[a].arrival_ns, flows_[a].id) < std::tie(state_[b].arrival_ns, flows_[b].id);
    });
  }

  MetricsReport run() {
    std::size_t next_arrival = 0;
    double now = 0.0;
    bool dirty = false;
    const double inf = std::numeric_limits<double>::infinity();

    while (next_arrival < order_.size() || !active_.empty()) {
      if (dirty) {
        compute_rates();
        dirty = false;
      }
      double t_next = next_arrival < order_.size() ? state_[order_[next_arrival]].arrival_ns : inf;
      for (std::size_t f : active_) {
        FlowState& s = state_[f];
        s.t_done = inf;
        s.t_quantum = inf;
        if (s.stage == Stage::Running && s.rate > 0.0) {
          const double size = static_cast<double>(flows_[f].size_bytes);
          s.t_done = std::isinf(s.rate) ? now : now + (size - s.sent) * 8e9 / s.rate;
          if (tracks_quanta(s) && static_cast<double>(s.next_quantum) < size) {
            s.t_quantum = std::isinf(s.rate) ? now : now + (static_cast<double>(s.next_quantum) - s.sent) * 8e9 / s.rate;
          }
        }
        t_next = std::min({t_next, s.t_done, s.t_quantum, s.reroute_at, s.resume_at});
      }
      if (std::isinf(t_next)) throw ContractError("simulation stalled with flows that can never progress");

      const double dt = t_next - now;
      for (std::size_t f : active_) {
        FlowState& s = state_[f];
        if (s.stage == Stage::Running && s.rate > 0.0 && !std::isinf(s.rate)) {
          s.sent = std::min(static_cast<double>(flows_[f].size_bytes), s.sent + s.rate * dt / 8e9);
        }
      }
      now = t_next;

      std::vector<std::size_t> snapshot = active_;
      bool released = false;
      for (std::size_t f : snapshot) {
        FlowState& s = state_[f];
        if (s.t_quantum <= now) {
          s.sent = std::max(s.sent, static_cast<double>(s.next_quantum));
          feed_ack(f, now, s.next_quantum);
          s.next_quantum += setup_.network.ack_quantum_bytes;
          ++events_;
          if (s.reroute_at <= now) dirty |= reroute(f, now);
        }
        if (s.t_done <= now) {
          complete(f, now);
          released = true;
          dirty = true;
          ++events_;
          continue;
        }
        if (s.reroute_at <= now) {
          dirty |= reroute(f, now);
          ++events_;
        }
        if (s.resume_at <= now) {
          s.resume_at = inf;
          s.stage = Stage::Running;
          s.resources = {host_tx(f), host_rx(f), lightpath_resource(f, FlowClass::Elephant)};
          strip_unused(s.resources);
          dirty = true;
          ++events_;
        }
      }
      std::erase_if(active_, [&](std::size_t f) { return state_[f].stage == Stage::Done; });
      if (released && setup_.policy == Policy::EcmpFso) admit_waiting(now);

      while (next_arrival < order_.size() && state_[order_[next_arrival]].arrival_ns <= now) {
        arrive(order_[next_arrival], now);
        ++next_arrival;
        ++events_;
        dirty = true;
      }
    }
    return report();
  }

 private:
  enum class Stage { Pending, Waiting, Running, Paused, Done };

  struct FlowState {
    FlowKey key;
    Stage stage = Stage::Pending;
    double arrival_ns = 0.0;
    double first_byte_ns = 0.0;
    double finish_ns = 0.0;
    double sent = 0.0;
    double rate = 0.0;
    std::vector<int> resources;
    std::uint32_t client_isn = 0;
    std::uint32_t server_isn = 0;
    std::uint64_t next_quantum = 0;
    bool on_mice_path = false;
    bool detected = false;
    std::optional<std::int64_t> detect_ns;
    double reroute_at = std::numeric_limits<double>::infinity();
    double resume_at = std::numeric_limits<double>::infinity();
    double t_done = std::numeric_limits<double>::infinity();
    double t_quantum = std::numeric_limits<double>::infinity();
    double bytes_on_mice = 0.0;
    bool rerouted = false;
    int wavelength = -1;
    int uplink = -1;
    int downlink = -1;
  };

  bool tracks_quanta(const FlowState& s) const {
    return setup_.policy == Policy::LightFdg && s.on_mice_path && !s.detected;
  }

  // Resource layout: host tx, host rx, then per policy either the cabled
  // links, the (link, wavelength) slots, or one entry per lightpath.
  void build_resources() {
    const int servers = setup_.racks.servers();
    const bool hosts_limited = setup_.network.host_link_bps > 0.0;
    host_base_ = static_cast<int>(capacity_.size());
    for (int h = 0; h < 2 * servers; ++h) capacity_.push_back(setup_.network.host_link_bps);
    hosts_limited_ = hosts_limited;
    link_count_ = 2 * setup_.racks.racks * setup_.spines;
    fabric_base_ = static_cast<int>(capacity_.size());
    switch (setup_.policy) {
      case Policy::Ecmp:
        for (int l = 0; l < link_count_; ++l) capacity_.push_back(setup_.link_rate_bps * setup_.network.ecmp_link_ratio);
        break;
      case Policy::EcmpFso:
        for (int l = 0; l < link_count_ * setup_.wavelengths; ++l) {
          capacity_.push_back(setup_.link_rate_bps / setup_.wavelengths);
        }
        slot_busy_.assign(static_cast<std::size_t>(link_count_) * setup_.wavelengths, false);
        break;
      case Policy::FgFso:
      case Policy::LightFdg:
        for (const auto& lp : setup_.provisioning->lightpaths) {
          lightpath_index_[{lp.src, lp.dst, lp.cls}] = lp.id;
          capacity_.push_back(lp.capacity_bps);
        }
        break;
    }
  }

  int host_tx(std::size_t f) const { return hosts_limited_ ? host_base_ + flows_[f].src_server : -1; }
  int host_rx(std::size_t f) const {
    return hosts_limited_ ? host_base_ + setup_.racks.servers() + flows_[f].dst_server : -1;
  }
  int uplink(int leaf, int spine) const { return leaf * setup_.spines + spine; }
  int downlink(int spine, int leaf) const {
    return setup_.racks.racks * setup_.spines + spine * setup_.racks.racks + leaf;
  }
  int slot(int link, int w) const { return link * setup_.wavelengths + w; }

  int lightpath_resource(std::size_t f, FlowClass cls) const {
    const int src = setup_.racks.rack_of(flows_[f].src_server);
    const int dst = setup_.racks.rack_of(flows_[f].dst_server);
    auto it = lightpath_index_.find({src, dst, cls});
    if (it == lightpath_index_.end()) {
      throw ContractError("no " + std::string(to_string(cls)) + " lightpath provisioned for rack " +
                          std::to_string(src) + " -> rack " + std::to_string(dst));
    }
    return fabric_base_ + it->second;
  }

  static void strip_unused(std::vector<int>& r) { std::erase(r, -1); }

  bool intra_rack(std::size_t f) const {
    return setup_.racks.rack_of(flows_[f].src_server) == setup_.racks.rack_of(flows_[f].dst_server);
  }

  void arrive(std::size_t f, double now) {
    FlowState& s = state_[f];
    active_.push_back(f);
    s.stage = Stage::Running;
    s.first_byte_ns = now;
    s.resources = {host_tx(f), host_rx(f)};
    if (setup_.policy == Policy::LightFdg) {
      PacketEvent e;
      e.ts_ns = std::llround(now);
      e.key = s.key.reversed();
      e.flags = TcpFlags::SynAck;
      e.seq = s.server_isn;
      e.ack = s.client_isn + 1U;
      e.observer = e.key.src >> 8;
      detector_.observe(e);
      check_detection(f, now);
    }
    if (!intra_rack(f)) {
      const int src = setup_.racks.rack_of(flows_[f].src_server);
      const int dst = setup_.racks.rack_of(flows_[f].dst_server);
      switch (setup_.policy) {
        case Policy::Ecmp: {
          const int spine = static_cast<int>(ecmp_route(s.key, static_cast<std::size_t>(setup_.spines)));
          s.resources.push_back(fabric_base_ + uplink(src, spine));
          s.resources.push_back(fabric_base_ + downlink(spine, dst));
          break;
        }
        case Policy::EcmpFso: {
          const int spine = static_cast<int>(ecmp_route(s.key, static_cast<std::size_t>(setup_.spines)));
          s.uplink = uplink(src, spine);
          s.downlink = downlink(spine, dst);
          if (!try_take_wavelength(f)) {
            s.stage = Stage::Waiting;
            waiting_.push_back(f);
          }
          break;
        }
        case Policy::FgFso:
          s.resources.push_back(lightpath_resource(f, flows_[f].cls));
          break;
        case Policy::LightFdg:
          if (s.detected && s.reroute_at <= now) {  // pre-classified, decision already in force
            s.resources.push_back(lightpath_resource(f, FlowClass::Elephant));
            s.reroute_at = std::numeric_limits<double>::infinity();
          } else {
            s.resources.push_back(lightpath_resource(f, FlowClass::Mice));
            s.on_mice_path = true;
          }
          break;
      }
    }
    strip_unused(s.resources);
  }

  bool try_take_wavelength(std::size_t f) {
    FlowState& s = state_[f];
    for (int w = 0; w < setup_.wavelengths; ++w) {
      if (!slot_busy_[slot(s.uplink, w)] && !slot_busy_[slot(s.downlink, w)]) {
        slot_busy_[slot(s.uplink, w)] = true;
        slot_busy_[slot(s.downlink, w)] = true;
        s.wavelength = w;
        s.resources = {host_tx(f), host_rx(f), fabric_base_ + slot(s.uplink, w), fabric_base_ + slot(s.downlink, w)};
        strip_unused(s.resources);
        return true;
      }
    }
    return false;
  }

  void admit_waiting(double now) {
    for (auto it = waiting_.begin(); it != waiting_.end();) {
      if (try_take_wavelength(*it)) {
        state_[*it].stage = Stage::Running;
        state_[*it].first_byte_ns = now;
        it = waiting_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void feed_ack(std::size_t f, double now, std::uint64_t acked) {
    FlowState& s = state_[f];
    PacketEvent e;
    e.ts_ns = std::llround(now);
    e.key = s.key.reversed();
    e.flags = TcpFlags::Ack;
    e.seq = s.server_isn + 1U;
    e.ack = s.client_isn + 1U + static_cast<std::uint32_t>(acked);
    e.observer = e.key.src >> 8;
    detector_.observe(e);
    check_detection(f, now);
  }

  void check_detection(std::size_t f, double now) {
    FlowState& s = state_[f];
    if (s.detected) return;
    auto d = detector_.detection(s.key);
    if (!d || d->detected != FlowClass::Elephant || !d->detect_ns) return;
    s.detected = true;
    s.detect_ns = d->detect_ns;
    if (s.stage != Stage::Done) s.reroute_at = std::max(now, static_cast<double>(*d->detect_ns));
  }

  bool reroute(std::size_t f, double now) {
    FlowState& s = state_[f];
    s.reroute_at = std::numeric_limits<double>::infinity();
    if (!s.on_mice_path || s.stage != Stage::Running) return false;
    s.on_mice_path = false;
    s.rerouted = true;
    s.bytes_on_mice = s.sent;
    if (setup_.network.reroute_pause_ns > 0) {
      s.stage = Stage::Paused;
      s.resources.clear();
      s.rate = 0.0;
      s.resume_at = now + static_cast<double>(setup_.network.reroute_pause_ns);
    } else {
      s.resources = {host_tx(f), host_rx(f), lightpath_resource(f, FlowClass::Elephant)};
      strip_unused(s.resources);
    }
    return true;
  }

  void complete(std::size_t f, double now) {
    FlowState& s = state_[f];
    s.sent = static_cast<double>(flows_[f].size_bytes);
    s.finish_ns = now;
    s.stage = Stage::Done;
    s.rate = 0.0;
    s.reroute_at = std::numeric_limits<double>::infinity();
    if (s.on_mice_path) s.bytes_on_mice = s.sent;
    if (setup_.policy == Policy::EcmpFso && s.wavelength >= 0) {
      slot_busy_[slot(s.uplink, s.wavelength)] = false;
      slot_busy_[slot(s.downlink, s.wavelength)] = false;
    }
    if (setup_.policy == Policy::LightFdg) {
      feed_ack(f, now, flows_[f].size_bytes);
      PacketEvent fin;
      fin.ts_ns = std::llround(now) + 1;
      fin.key = s.key;
      fin.flags = TcpFlags::Fin;
      fin.seq = s.client_isn + 1U + static_cast<std::uint32_t>(flows_[f].size_bytes);
      fin.ack = s.server_isn + 1U;
      fin.observer = fin.key.src >> 8;
      detector_.observe(fin);
      s.reroute_at = std::numeric_limits<double>::infinity();
    }
    s.resources.clear();
  }

  // Progressive filling: repeatedly saturate the resource with the smallest
  // equal share among its unfrozen flows.
  void compute_rates() {
    std::vector<double> remaining = capacity_;
    std::vector<std::vector<std::size_t>> users(capacity_.size());
    std::vector<std::size_t> unfrozen_count(capacity_.size(), 0);
    std::vector<std::size_t> running;
    for (std::size_t f : active_) {
      FlowState& s = state_[f];
      s.rate = 0.0;
      if (s.stage != Stage::Running) continue;
      if (s.resources.empty()) {
        s.rate = std::numeric_limits<double>::infinity();
        continue;
      }
      running.push_back(f);
      for (int r : s.resources) {
        users[static_cast<std::size_t>(r)].push_back(f);
        ++unfrozen_count[static_cast<std::size_t>(r)];
      }
    }
    std::vector<std::size_t> used;
    for (std::size_t r = 0; r < users.size(); ++r) {
      if (!users[r].empty()) used.push_back(r);
    }
    std::vector<bool> frozen(state_.size(), false);
    std::size_t left = running.size();
    while (left > 0) {
      std::size_t best = 0;
      double best_share = std::numeric_limits<double>::infinity();
      for (std::size_t r : used) {
        if (unfrozen_count[r] == 0) continue;
        const double share = std::max(0.0, remaining[r]) / static_cast<double>(unfrozen_count[r]);
        if (share < best_share) {
          best_share = share;
          best = r;
        }
      }
      for (std::size_t f : users[best]) {
        if (frozen[f]) continue;
        frozen[f] = true;
        --left;
        state_[f].rate = best_share;
        for (int r : state_[f].resources) {
          remaining[static_cast<std::size_t>(r)] -= best_share;
          --unfrozen_count[static_cast<std::size_t>(r)];
        }
      }
    }
    if (setup_.network.check_invariants) {
      std::vector<double> load(capacity_.size(), 0.0);
      for (std::size_t f : running) {
        for (int r : state_[f].resources) load[static_cast<std::size_t>(r)] += state_[f].rate;
      }
      for (std::size_t r = 0; r < load.size(); ++r) {
        if (load[r] > capacity_[r] * (1.0 + 1e-9)) {
          throw ContractError("resource " + std::to_string(r) + " carries " + std::to_string(load[r]) +
                              " bit/s over its capacity " + std::to_string(capacity_[r]));
        }
      }
    }
  }

  MetricsReport report() {
    MetricsReport rep;
    rep.policy = setup_.policy;
    rep.seed = setup_.seed;
    rep.events = events_;
    rep.lightpaths = setup_.provisioning ? setup_.provisioning->lightpaths.size() : 0;
    const auto tau_m = setup_.mice_deadline_s * 1e9;
    const auto tau_e = setup_.elephant_deadline_s * 1e9;
    for (std::size_t f = 0; f < flows_.size(); ++f) {
      const FlowState& s = state_[f];
      FlowResult r;
      r.id = flows_[f].id;
      r.key = s.key;
      r.truth = flows_[f].cls;
      r.size_bytes = flows_[f].size_bytes;
      r.start_ns = std::llround(s.arrival_ns);
      r.finish_ns = std::llround(s.finish_ns);
      r.fct_ns = r.finish_ns - r.start_ns;
      r.wait_ns = std::llround(s.first_byte_ns) - r.start_ns;
      r.deadline_met = static_cast<double>(r.fct_ns) <= (r.truth == FlowClass::Elephant ? tau_e : tau_m);
      switch (setup_.policy) {
        case Policy::FgFso: r.detected = r.truth; break;
        case Policy::LightFdg:
          r.detected = s.detected ? FlowClass::Elephant : FlowClass::Mice;
          r.detect_ns = s.detect_ns;
          r.bytes_on_mice_path = static_cast<std::uint64_t>(std::llround(s.bytes_on_mice));
          r.rerouted = s.rerouted;
          break;
        default: r.detected = FlowClass::Unknown; break;
      }
      rep.flows.push_back(r);
    }
    std::sort(rep.flows.begin(), rep.flows.end(), [](const FlowResult& a, const FlowResult& b) { return a.id < b.id; });
    if (setup_.policy == Policy::LightFdg) {
      rep.detection = detection_metrics(detector_, ground_truth(flows_, setup_.racks, setup_.detector.threshold_bytes));
    }
    collect_metrics(rep);
    return rep;
  }

  SimulationSetup setup_;
  std::vector<FlowDescriptor> flows_;
  Detector detector_;
  std::vector<FlowState> state_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> active_;
  std::vector<std::size_t> waiting_;
  std::vector<double> capacity_;
  std::vector<bool> slot_busy_;
  std::map<std::tuple<int, int, FlowClass>, LightpathId> lightpath_index_;
  int host_base_ = 0;
  int fabric_base_ = 0;
  int link_count_ = 0;
  bool hosts_limited_ = false;
  std::uint64_t events_ = 0;
};

}  // namespace detail

inline MetricsReport simulate(const SimulationSetup& setup, std::span<const FlowDescriptor> flows) {
  return detail::FlowSimulator(setup, flows).run();
}

struct PreparedRun {
  std::vector<FlowDescriptor> flows;
  PhysicalTopology topology;
  std::optional<ProvisioningResult> provisioning;
  SimulationSetup setup;
};

// Flows for `seed`, plus the provisioned fabric when the policy needs it.
inline PreparedRun prepare_run(const ScenarioConfig& sc, Policy policy, std::uint64_t seed) {
  sc.validate();
  PreparedRun run;
  const RackMap racks = sc.racks();
  run.flows = make_flows(sc.traffic, racks, seed);
  run.topology = sc.topology.build();
  if (uses_lightpaths(policy)) {
    run.provisioning = provision_all(run.topology, scenario_demands(sc, run.flows), sc.topology.k_paths, seed);
  }
  SimulationSetup& s = run.setup;
  s.policy = policy;
  s.racks = racks;
  s.spines = sc.topology.spines();
  s.wavelengths = sc.topology.wavelengths;
  s.link_rate_bps = sc.topology.link_rate_bps;
  s.network = sc.network;
  s.detector = sc.detector;
  s.mice_deadline_s = sc.demand.mice_deadline_s;
  s.elephant_deadline_s = sc.demand.elephant_deadline_s;
  s.seed = seed;
  return run;
}

inline MetricsReport run(const ScenarioConfig& sc, Policy policy, std::uint64_t seed) {
  PreparedRun prepared = prepare_run(sc, policy, seed);
  prepared.setup.provisioning = prepared.provisioning ? &*prepared.provisioning : nullptr;
  return simulate(prepared.setup, prepared.flows);
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kFlowCsvHeader =
    "flow_id,class_true,class_detected,policy,start_ns,fct_ns,deadline_met,detect_ns";
inline constexpr std::string_view kSummaryCsvHeader =
    "policy,seed,class,flows,bytes,throughput_bps,mean_fct_ns,deadline_satisfaction";

inline void write_flow_csv(std::ostream& os, const MetricsReport& r) {
  os << kFlowCsvHeader << '\n';
  for (const auto& f : r.flows) {
    os << f.id << ',' << to_string(f.truth) << ',' << to_string(f.detected) << ',' << to_string(r.policy) << ','
       << f.start_ns << ',' << f.fct_ns << ',' << (f.deadline_met ? 1 : 0) << ',';
    if (f.detect_ns) os << *f.detect_ns;
    os << '\n';
  }
}

inline void write_summary_header(std::ostream& os) { os << kSummaryCsvHeader << '\n'; }

inline void write_summary_rows(std::ostream& os, const MetricsReport& r) {
  for (const ClassSummary* s : {&r.mice, &r.elephant}) {
    std::ostringstream row;
    row << std::setprecision(15) << to_string(r.policy) << ',' << r.seed << ',' << to_string(s->cls) << ','
        << s->flows << ',' << s->bytes << ',' << s->throughput_bps << ',' << s->mean_fct_ns << ','
        << s->deadline_satisfaction;
    os << row.str() << '\n';
  }
}

}  // namespace lightfdg
