#pragma once

// Synthetic workloads and their TCP packet-event rendering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lightfdg/detection.hpp"
#include "lightfdg/errors.hpp"
#include "lightfdg/grooming.hpp"
#include "lightfdg/packet.hpp"
#include "lightfdg/types.hpp"

namespace lightfdg {

enum class TrafficKind { PureMice, PureElephant, Mix, Shuffle };

inline std::string_view to_string(TrafficKind k) {
  switch (k) {
    case TrafficKind::PureMice: return "pure-mf";
    case TrafficKind::PureElephant: return "pure-ef";
    case TrafficKind::Mix: return "mix";
    case TrafficKind::Shuffle: return "shuffle";
  }
  return "?";
}

inline TrafficKind parse_traffic_kind(std::string_view s) {
  if (s == "pure-mf") return TrafficKind::PureMice;
  if (s == "pure-ef") return TrafficKind::PureElephant;
  if (s == "mix") return TrafficKind::Mix;
  if (s == "shuffle") return TrafficKind::Shuffle;
  throw ConfigError("unknown traffic kind '" + std::string(s) + "' (expected pure-mf|pure-ef|mix|shuffle)");
}

// Inclusive byte range; min == max is a fixed size.
struct SizeRange {
  std::uint64_t min = 0;
  std::uint64_t max = 0;

  bool fixed() const noexcept { return min == max; }
};

struct TrafficConfig {
  TrafficKind kind = TrafficKind::Mix;
  std::size_t flow_count = 1000;
  double mice_fraction = 0.9;
  SizeRange mice_size{100'000, 100'000};
  SizeRange elephant_size{128'000'000, 128'000'000};
  // Poisson arrival rate in flows/s: of the whole workload for the
  // pure/mix kinds, of each communicating rack pair for the shuffle.
  double arrival_rate = 1000.0;
  // Per-flow rate carried into grooming.
  double flow_rate = 1.0;
  int shuffle_k = 20;
  double elephant_fraction = 0.1;
  int group_size = 0;
  int ring_offset = 1;
  std::uint64_t threshold_bytes = kDefaultThresholdBytes;
  std::uint16_t dst_port = 5001;

  void validate(const RackMap& racks) const {
    if (racks.racks < 2) throw ConfigError("traffic needs at least 2 racks");
    if (racks.hosts_per_rack < 1 || racks.hosts_per_rack > 254) {
      throw ConfigError("hosts per rack must be within [1, 254]");
    }
    if (!(arrival_rate > 0.0) || !std::isfinite(arrival_rate)) throw ConfigError("arrival rate must be > 0");
    if (!(flow_rate >= 0.0) || !std::isfinite(flow_rate)) throw ConfigError("flow rate must be >= 0");
    if (threshold_bytes == 0) throw ConfigError("threshold must be > 0");
    const bool uses_mice = kind != TrafficKind::PureElephant;
    const bool uses_elephants = kind != TrafficKind::PureMice;
    if (uses_mice) {
      if (mice_size.min == 0 || mice_size.min > mice_size.max) throw ConfigError("MF size range must be 0 < min <= max");
      if (mice_size.max > threshold_bytes) throw ConfigError("MF size range crosses the detection threshold");
    }
    if (uses_elephants) {
      if (elephant_size.min == 0 || elephant_size.min > elephant_size.max) {
        throw ConfigError("EF size range must be 0 < min <= max");
      }
      if (elephant_size.min <= threshold_bytes) throw ConfigError("EF size range crosses the detection threshold");
    }
    if (kind == TrafficKind::Mix && !(mice_fraction >= 0.0 && mice_fraction <= 1.0)) {
      throw ConfigError("MF fraction must be within [0, 1]");
    }
    if (kind == TrafficKind::Shuffle) {
      if (!(elephant_fraction >= 0.0 && elephant_fraction <= 1.0)) throw ConfigError("EF fraction must be within [0, 1]");
      if (shuffle_k < 1) throw ConfigError("shuffle k must be >= 1");
      if (2 * shuffle_k > racks.hosts_per_rack) {
        throw ConfigError("shuffle k=" + std::to_string(shuffle_k) + " needs " + std::to_string(2 * shuffle_k) +
                          " hosts per rack, have " + std::to_string(racks.hosts_per_rack));
      }
      if (group_size < 0) throw ConfigError("group size must be >= 0");
      if (((ring_offset % racks.racks) + racks.racks) % racks.racks == 0) {
        throw ConfigError("ring offset must not map a rack onto itself");
      }
    }
  }
};

namespace detail {

inline std::uint64_t draw_size(const SizeRange& r, std::mt19937_64& rng) {
  if (r.fixed()) return r.min;
  return std::uniform_int_distribution<std::uint64_t>(r.min, r.max)(rng);
}

inline std::uint16_t source_port(FlowId id) { return static_cast<std::uint16_t>(1024 + id % 64000); }

}  // namespace detail

// Pure-MF, pure-EF and mix workloads: exponential inter-arrivals over the
// whole workload, client and server always in different racks.
inline std::vector<FlowDescriptor> generate_flows(const TrafficConfig& config, const RackMap& racks,
                                                  std::uint64_t seed) {
  config.validate(racks);
  if (config.kind == TrafficKind::Shuffle) throw ConfigError("shuffle workloads come from shuffle_pattern");
  std::mt19937_64 rng(seed);
  const std::size_t n = config.flow_count;

  std::size_t mice = 0;
  switch (config.kind) {
    case TrafficKind::PureMice: mice = n; break;
    case TrafficKind::PureElephant: mice = 0; break;
    default: mice = static_cast<std::size_t>(std::llround(config.mice_fraction * static_cast<double>(n))); break;
  }
  std::vector<bool> is_mice(n, false);
  std::fill_n(is_mice.begin(), mice, true);
  std::shuffle(is_mice.begin(), is_mice.end(), rng);

  std::exponential_distribution<double> gap(config.arrival_rate);
  std::uniform_int_distribution<int> pick(0, racks.servers() - 1);
  std::vector<FlowDescriptor> flows;
  flows.reserve(n);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    FlowDescriptor f;
    f.id = static_cast<FlowId>(i);
    t += gap(rng);
    f.arrival_s = t;
    do {
      f.src_server = pick(rng);
      f.dst_server = pick(rng);
    } while (racks.rack_of(f.src_server) == racks.rack_of(f.dst_server));
    f.size_bytes = detail::draw_size(is_mice[i] ? config.mice_size : config.elephant_size, rng);
    f.cls = f.size_bytes > config.threshold_bytes ? FlowClass::Elephant : FlowClass::Mice;
    f.rate = config.flow_rate;
    f.src_port = detail::source_port(f.id);
    f.dst_port = config.dst_port;
    flows.push_back(f);
  }
  return flows;
}

// Elephant positions within one sender set of size k.
inline std::vector<bool> shuffle_elephant_slots(int k, double elephant_fraction, int group_size) {
  std::vector<bool> ef(static_cast<std::size_t>(k), false);
  const int count = static_cast<int>(std::llround(elephant_fraction * k));
  if (count <= 0) return ef;
  if (group_size > 0) {
    int placed = 0;
    for (int m = group_size - 1; m < k && placed < count; m += group_size, ++placed) ef[m] = true;
    for (int m = k - 1; m >= 0 && placed < count; --m) {
      if (!ef[m]) {
        ef[m] = true;
        ++placed;
      }
    }
    return ef;
  }
  for (int e = 0; e < count; ++e) ef[static_cast<std::size_t>((e + 1) * k / count - 1)] = true;
  return ef;
}

// MapReduce-style shuffle over a communication ring: rack i talks to rack
// i + offset. Hosts 0..k-1 of each rack send, hosts k..2k-1 receive, sender
// m targets receiver k + m. Each pair's k flows arrive as a Poisson stream in
// a seeded random order.
inline std::vector<FlowDescriptor> shuffle_pattern(const TrafficConfig& config, const RackMap& racks,
                                                   std::uint64_t seed) {
  config.validate(racks);
  std::mt19937_64 rng(seed);
  const int k = config.shuffle_k;
  const auto ef_slot = shuffle_elephant_slots(k, config.elephant_fraction, config.group_size);
  std::exponential_distribution<double> gap(config.arrival_rate);

  std::vector<FlowDescriptor> flows;
  flows.reserve(static_cast<std::size_t>(racks.racks) * k);
  for (int i = 0; i < racks.racks; ++i) {
    const int j = ((i + config.ring_offset) % racks.racks + racks.racks) % racks.racks;
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> arrival(static_cast<std::size_t>(k));
    double t = 0.0;
    for (int m : order) {
      t += gap(rng);
      arrival[m] = t;
    }
    for (int m = 0; m < k; ++m) {
      FlowDescriptor f;
      f.id = static_cast<FlowId>(flows.size());
      f.src_server = racks.server(i, m);
      f.dst_server = racks.server(j, k + m);
      f.size_bytes = detail::draw_size(ef_slot[m] ? config.elephant_size : config.mice_size, rng);
      f.cls = f.size_bytes > config.threshold_bytes ? FlowClass::Elephant : FlowClass::Mice;
      f.rate = config.flow_rate;
      f.arrival_s = arrival[m];
      f.src_port = detail::source_port(f.id);
      f.dst_port = config.dst_port;
      flows.push_back(f);
    }
  }
  return flows;
}

inline std::vector<FlowDescriptor> make_flows(const TrafficConfig& config, const RackMap& racks, std::uint64_t seed) {
  return config.kind == TrafficKind::Shuffle ? shuffle_pattern(config, racks, seed)
                                             : generate_flows(config, racks, seed);
}

// ---------------------------------------------------------------------------
// Addressing

// 10.(rack / 256).(rack % 256).(host + 1): one /24 per rack.
inline Ipv4 host_address(int rack, int host) {
  return (10U << 24) | ((static_cast<Ipv4>(rack) >> 8 & 0xffU) << 16) | ((static_cast<Ipv4>(rack) & 0xffU) << 8) |
         static_cast<Ipv4>(host + 1);
}

inline FlowKey flow_key(const FlowDescriptor& f, const RackMap& racks) {
  FlowKey k;
  k.src = host_address(racks.rack_of(f.src_server), racks.host_of(f.src_server));
  k.dst = host_address(racks.rack_of(f.dst_server), racks.host_of(f.dst_server));
  k.sport = f.src_port;
  k.dport = f.dst_port;
  return k;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Initial sequence numbers are hashed from (seed, flow id); the full 32-bit
// range is used so some flows wrap.
inline std::pair<std::uint32_t, std::uint32_t> flow_isns(std::uint64_t seed, FlowId id) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(id)));
  return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

// ---------------------------------------------------------------------------
// Packet events

struct PacketGenConfig {
  std::uint32_t mss = 1460;
  std::uint32_t ack_every = 2;
  double rate_bps = 1e9;               // constant sending rate of every flow
  std::int64_t control_gap_ns = 1000;  // handshake spacing and ACK turnaround
  std::uint64_t isn_seed = 0;

  void validate() const {
    if (mss == 0) throw ConfigError("mss must be > 0");
    if (ack_every == 0) throw ConfigError("ack-every must be >= 1");
    if (!(rate_bps > 0.0) || !std::isfinite(rate_bps)) throw ConfigError("sending rate must be > 0");
    if (control_gap_ns < 0) throw ConfigError("control gap must be >= 0");
  }
};

// Time-ordered packet events of one TCP connection: SYN, SYN+ACK, ACK, the
// DATA segments with a cumulative ACK every `ack_every` segments and after
// the last one, then FIN.
class FlowPacketGenerator {
 public:
  FlowPacketGenerator(const FlowKey& key, std::uint64_t size_bytes, std::int64_t start_ns, std::uint32_t client_isn,
                      std::uint32_t server_isn, const PacketGenConfig& config)
      : key_(key),
        size_(size_bytes),
        start_(start_ns),
        client_isn_(client_isn),
        server_isn_(server_isn),
        mss_(config.mss),
        ack_every_(config.ack_every),
        gap_(config.control_gap_ns),
        segment_ns_(static_cast<double>(config.mss) * 8e9 / config.rate_bps) {
    config.validate();
    segments_ = (size_ + mss_ - 1) / mss_;
    data_start_ = start_ + 2 * gap_;
    fill();
  }

  bool done() const noexcept { return phase_ == Phase::Done; }
  const PacketEvent& peek() const noexcept { return current_; }

  void pop() {
    advance();
    fill();
  }

  bool next(PacketEvent& out) {
    if (done()) return false;
    out = current_;
    pop();
    return true;
  }

  std::uint64_t segment_count() const noexcept { return segments_; }

 private:
  enum class Phase { Syn, SynAck, HandshakeAck, Body, Fin, Done };

  std::int64_t segment_ts(std::uint64_t i) const {
    return data_start_ + static_cast<std::int64_t>(std::llround(static_cast<double>(i) * segment_ns_));
  }

  std::uint32_t client_data_seq() const { return client_isn_ + 1U; }
  std::uint32_t server_data_seq() const { return server_isn_ + 1U; }

  PacketEvent make(std::int64_t ts, const FlowKey& k, TcpFlags f, std::uint32_t seq, std::uint32_t ack,
                   std::uint32_t len) const {
    PacketEvent e;
    e.ts_ns = ts;
    e.key = k;
    e.flags = f;
    e.seq = seq;
    e.ack = ack;
    e.len = len;
    e.observer = k.src >> 8;
    return e;
  }

  void fill() {
    switch (phase_) {
      case Phase::Syn:
        current_ = make(start_, key_, TcpFlags::Syn, client_isn_, 0, 0);
        break;
      case Phase::SynAck:
        current_ = make(start_ + gap_, key_.reversed(), TcpFlags::SynAck, server_isn_, client_data_seq(), 0);
        break;
      case Phase::HandshakeAck:
        current_ = make(start_ + 2 * gap_, key_, TcpFlags::Ack, client_data_seq(), server_data_seq(), 0);
        break;
      case Phase::Body: {
        const bool data_left = next_segment_ < segments_;
        if (!data_left && ack_head_ == pending_acks_.size()) {
          phase_ = Phase::Fin;
          fill();
          return;
        }
        const std::int64_t data_ts = data_left ? segment_ts(next_segment_) : 0;
        if (data_left && (ack_head_ == pending_acks_.size() || data_ts <= pending_acks_[ack_head_].first)) {
          const std::uint64_t offset = next_segment_ * mss_;
          const auto len = static_cast<std::uint32_t>(std::min<std::uint64_t>(mss_, size_ - offset));
          current_ = make(data_ts, key_, TcpFlags::Data, client_data_seq() + static_cast<std::uint32_t>(offset),
                          server_data_seq(), len);
          body_is_data_ = true;
        } else {
          const auto [ts, acked] = pending_acks_[ack_head_];
          current_ = make(ts, key_.reversed(), TcpFlags::Ack, server_data_seq(),
                          client_data_seq() + static_cast<std::uint32_t>(acked), 0);
          body_is_data_ = false;
        }
        break;
      }
      case Phase::Fin:
        current_ = make(last_ts_ + 1, key_, TcpFlags::Fin, client_data_seq() + static_cast<std::uint32_t>(size_),
                        server_data_seq(), 0);
        break;
      case Phase::Done:
        break;
    }
  }

  void advance() {
    last_ts_ = std::max(last_ts_, current_.ts_ns);
    switch (phase_) {
      case Phase::Syn: phase_ = Phase::SynAck; break;
      case Phase::SynAck: phase_ = Phase::HandshakeAck; break;
      case Phase::HandshakeAck: phase_ = Phase::Body; break;
      case Phase::Body:
        if (body_is_data_) {
          ++next_segment_;
          if (next_segment_ % ack_every_ == 0 || next_segment_ == segments_) {
            pending_acks_.emplace_back(current_.ts_ns + gap_, std::min<std::uint64_t>(next_segment_ * mss_, size_));
          }
        } else {
          if (++ack_head_ == pending_acks_.size()) {
            pending_acks_.clear();
            ack_head_ = 0;
          }
        }
        break;
      case Phase::Fin: phase_ = Phase::Done; break;
      case Phase::Done: break;
    }
  }

  FlowKey key_;
  std::uint64_t size_;
  std::int64_t start_;
  std::uint32_t client_isn_;
  std::uint32_t server_isn_;
  std::uint64_t mss_;
  std::uint64_t ack_every_;
  std::int64_t gap_;
  double segment_ns_;
  std::uint64_t segments_ = 0;
  std::int64_t data_start_ = 0;

  Phase phase_ = Phase::Syn;
  PacketEvent current_;
  std::uint64_t next_segment_ = 0;
  std::vector<std::pair<std::int64_t, std::uint64_t>> pending_acks_;  // FIFO from ack_head_
  std::size_t ack_head_ = 0;
  bool body_is_data_ = false;
  std::int64_t last_ts_ = 0;
};

inline FlowPacketGenerator packet_generator(const FlowDescriptor& f, const RackMap& racks,
                                            const PacketGenConfig& config) {
  const auto [client_isn, server_isn] = flow_isns(config.isn_seed, f.id);
  return FlowPacketGenerator(flow_key(f, racks), f.size_bytes, std::llround(f.arrival_s * 1e9), client_isn,
                             server_isn, config);
}

// Merges per-flow generators into one stream ordered by (timestamp, flow
// position), through a loser tree. Tree keys pack the timestamp above the
// leaf index so that one integer comparison orders both.
class PacketEventStream {
 public:
  void add(FlowPacketGenerator gen) {
    gens_.push_back(std::move(gen));
    built_ = false;
  }

  bool next(PacketEvent& out) {
    if (!built_) build();
    if (winner_ == kExhausted) return false;
    const std::size_t leaf = winner_ & leaf_mask_;
    auto& g = gens_[leaf];
    out = g.peek();
    g.pop();
    replay(g.done() ? kExhausted : pack(g.peek().ts_ns, leaf), leaf);
    return true;
  }

 private:
  static constexpr std::uint64_t kExhausted = std::numeric_limits<std::uint64_t>::max();

  std::uint64_t pack(std::int64_t ts, std::size_t leaf) const {
    if (ts < 0 || static_cast<std::uint64_t>(ts) >= max_ts_) {
      throw ContractError("packet timestamp " + std::to_string(ts) + " outside the mergeable range");
    }
    return static_cast<std::uint64_t>(ts) << leaf_bits_ | leaf;
  }

  void build() {
    leaves_ = 1;
    leaf_bits_ = 0;
    while (leaves_ < gens_.size()) {
      leaves_ *= 2;
      ++leaf_bits_;
    }
    leaf_mask_ = leaves_ - 1;
    max_ts_ = leaf_bits_ == 0 ? kExhausted : (std::uint64_t{1} << (64 - leaf_bits_)) - 1;
    std::vector<std::uint64_t> win(2 * leaves_, kExhausted);
    for (std::size_t i = 0; i < gens_.size(); ++i) {
      if (!gens_[i].done()) win[leaves_ + i] = pack(gens_[i].peek().ts_ns, i);
    }
    losers_.assign(leaves_, kExhausted);
    for (std::size_t node = leaves_ - 1; node >= 1; --node) {
      losers_[node] = std::max(win[2 * node], win[2 * node + 1]);
      win[node] = std::min(win[2 * node], win[2 * node + 1]);
    }
    winner_ = win[1];
    built_ = true;
  }

  void replay(std::uint64_t w, std::size_t leaf) {
    for (std::size_t node = (leaf + leaves_) / 2; node >= 1; node /= 2) {
      const std::uint64_t l = losers_[node];
      losers_[node] = std::max(l, w);
      w = std::min(l, w);
    }
    winner_ = w;
  }

  std::vector<FlowPacketGenerator> gens_;
  std::vector<std::uint64_t> losers_;  // internal nodes 1 .. leaves_-1
  std::size_t leaves_ = 0;
  unsigned leaf_bits_ = 0;
  std::uint64_t leaf_mask_ = 0;
  std::uint64_t max_ts_ = 0;
  std::uint64_t winner_ = kExhausted;
  bool built_ = false;
};

inline PacketEventStream packet_event_stream(std::span<const FlowDescriptor> flows, const RackMap& racks,
                                             const PacketGenConfig& config) {
  PacketEventStream s;
  for (const auto& f : flows) s.add(packet_generator(f, racks, config));
  return s;
}

inline std::vector<PacketEvent> flows_to_packet_events(std::span<const FlowDescriptor> flows, const RackMap& racks,
                                                       const PacketGenConfig& config) {
  auto s = packet_event_stream(flows, racks, config);
  std::vector<PacketEvent> out;
  PacketEvent e;
  while (s.next(e)) out.push_back(e);
  return out;
}

// Generator-side truth keyed by data direction.
inline GroundTruthMap ground_truth(std::span<const FlowDescriptor> flows, const RackMap& racks,
                                   std::uint64_t threshold_bytes) {
  GroundTruthMap truth;
  for (const auto& f : flows) {
    GroundTruth g;
    const FlowKey k = flow_key(f, racks);
    g.label = k.to_string();
    g.cls = f.size_bytes > threshold_bytes ? FlowClass::Elephant : FlowClass::Mice;
    g.start_ns = std::llround(f.arrival_s * 1e9);
    g.bytes = f.size_bytes;
    truth[k] = g;
  }
  return truth;
}

}  // namespace lightfdg
