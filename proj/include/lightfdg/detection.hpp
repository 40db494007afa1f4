#pragma once

// TCP-ACK based elephant-flow detection.
//
// The collector learns each flow's initial sequence number from the
// low-frequency handshake (SYN+ACK) and forgets the flow on FIN/RST. The
// classifier compares the acknowledgment number of high-frequency ACKs with
// that baseline: once (ack - t_f) mod 2^32 exceeds the threshold the flow is
// an elephant.
//
// Two placements share these components:
//  * in-network: runs beside the host's virtual switch, reads every ACK and
//    classifies at the ACK's own timestamp;
//  * centralized: edge switches capture SYN+ACK/FIN/RST and (sampled) ACKs
//    and send them to a central unit; every decision lands one notification
//    delay later, and reconfiguring an edge switch costs another delay.
//
// A random packet-sampling detector (1-in-S over all packets, size estimated
// as S x sampled payload) is provided as the comparison baseline.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lightfdg/errors.hpp"
#include "lightfdg/packet.hpp"
#include "lightfdg/types.hpp"

namespace lightfdg {

inline constexpr std::uint64_t kDefaultThresholdBytes = 1ULL << 20;

enum class DetectionMode { InNetwork, Centralized };

inline std::string_view to_string(DetectionMode m) {
  return m == DetectionMode::InNetwork ? "in-network" : "centralized";
}

inline DetectionMode parse_detection_mode(std::string_view s) {
  if (s == "in-network") return DetectionMode::InNetwork;
  if (s == "centralized") return DetectionMode::Centralized;
  throw ConfigError("unknown detection mode '" + std::string(s) + "' (expected in-network|centralized)");
}

inline std::map<std::uint16_t, FlowClass> default_port_classes() {
  return {{20, FlowClass::Elephant}, {514, FlowClass::Mice}, {123, FlowClass::Mice}};
}

struct DetectorConfig {
  std::uint64_t threshold_bytes = kDefaultThresholdBytes;
  DetectionMode mode = DetectionMode::InNetwork;
  std::int64_t notification_delay_ns = 200'000;
  bool preclassify = true;
  std::map<std::uint16_t, FlowClass> port_classes = default_port_classes();
  bool stop_useless = true;
  std::uint32_t ack_sample_rate = 100;

  // Decision latency added to an observation: zero in-network.
  std::int64_t decision_delay_ns() const { return mode == DetectionMode::Centralized ? notification_delay_ns : 0; }

  void validate() const {
    if (threshold_bytes == 0) throw ConfigError("detection threshold must be > 0");
    if (ack_sample_rate < 1) throw ConfigError("ACK sampling rate must be >= 1");
    if (notification_delay_ns < 0) throw ConfigError("notification delay must be >= 0");
  }
};

enum class ClassState { PresumedMice, ClassifiedElephant, PreClassified, Closed };

struct FlowRecord {
  FlowKey key;  // data direction
  std::uint32_t isn = 0;         // t_f
  std::uint32_t latest_ack = 0;  // t_c
  ClassState state = ClassState::PresumedMice;
  std::optional<FlowClass> preclass;
  std::optional<std::int64_t> classified_ns;
  std::int64_t opened_ns = 0;

  std::uint32_t bytes_acked() const noexcept { return latest_ack - isn; }
};

class FlowTable {
 public:
  struct Shard {
    std::unordered_map<FlowKey, FlowRecord, FlowKeyHash> records;
    std::uint64_t lookups = 0;
    std::uint64_t inserts = 0;
  };

  static std::uint32_t shard_of(const FlowKey& k) noexcept { return k.subnet(); }

  FlowRecord* find(const FlowKey& k) {
    auto s = shards_.find(shard_of(k));
    if (s == shards_.end()) return nullptr;
    ++s->second.lookups;
    auto it = s->second.records.find(k);
    return it == s->second.records.end() ? nullptr : &it->second;
  }

  // Returns the stored record and whether it was newly inserted.
  std::pair<FlowRecord*, bool> insert(const FlowRecord& r) {
    Shard& s = shards_[shard_of(r.key)];
    ++s.lookups;
    auto [it, inserted] = s.records.try_emplace(r.key, r);
    if (inserted) {
      ++s.inserts;
      ++size_;
    }
    return {&it->second, inserted};
  }

  std::optional<FlowRecord> erase(const FlowKey& k) {
    auto s = shards_.find(shard_of(k));
    if (s == shards_.end()) return std::nullopt;
    auto it = s->second.records.find(k);
    if (it == s->second.records.end()) return std::nullopt;
    FlowRecord r = std::move(it->second);
    s->second.records.erase(it);
    --size_;
    return r;
  }

  std::size_t size() const noexcept { return size_; }
  const std::map<std::uint32_t, Shard>& shards() const noexcept { return shards_; }

  std::uint64_t duplicates = 0;  // SYN+ACK for a live flow
  std::uint64_t orphans = 0;     // FIN/RST for an unknown flow
  std::uint64_t misses = 0;      // ACK for an unknown flow

 private:
  std::map<std::uint32_t, Shard> shards_;
  std::size_t size_ = 0;
};

inline std::optional<FlowClass> preclassify(const FlowKey& key, const DetectorConfig& config) {
  if (!config.preclassify) return std::nullopt;
  if (auto it = config.port_classes.find(key.dport); it != config.port_classes.end()) return it->second;
  if (auto it = config.port_classes.find(key.sport); it != config.port_classes.end()) return it->second;
  return std::nullopt;
}

struct IngestResult {
  std::vector<FlowRecord> created;  // forward (client->server) first
  std::vector<FlowRecord> closed;
  bool duplicate = false;
  bool orphan = false;
};

// Low-frequency phase. A SYN+ACK (server -> client) carries both baselines:
// its ack field is the next client data byte, its seq + 1 the next server
// data byte. Each direction gets its own record.
inline IngestResult collector_ingest(FlowTable& table, const PacketEvent& e, const DetectorConfig& config) {
  IngestResult out;
  if (e.flags == TcpFlags::SynAck) {
    const FlowKey forward = e.key.reversed();
    const auto pre = preclassify(forward, config);
    for (const auto& [key, isn] : {std::pair{forward, e.ack}, std::pair{e.key, e.seq + 1U}}) {
      FlowRecord r;
      r.key = key;
      r.isn = isn;
      r.latest_ack = isn;
      r.opened_ns = e.ts_ns;
      if (pre) {
        r.state = ClassState::PreClassified;
        r.preclass = pre;
        r.classified_ns = e.ts_ns + config.decision_delay_ns();
      }
      auto [rec, inserted] = table.insert(r);
      if (inserted) {
        out.created.push_back(*rec);
      } else if (key == forward) {
        ++table.duplicates;
        out.duplicate = true;
      }
    }
  } else if (e.flags == TcpFlags::Fin || e.flags == TcpFlags::Rst) {
    for (const FlowKey& key : {e.key, e.key.reversed()}) {
      if (auto r = table.erase(key)) {
        r->state = ClassState::Closed;
        out.closed.push_back(std::move(*r));
      }
    }
    if (out.closed.empty()) {
      ++table.orphans;
      out.orphan = true;
    }
  }
  return out;
}

enum class ClassifyOutcome { StillMice, NewlyElephant, Ignored };

// High-frequency phase. The ACK acknowledges data flowing opposite to it.
inline ClassifyOutcome classify_ack(FlowTable& table, const PacketEvent& e, const DetectorConfig& config) {
  if (e.flags != TcpFlags::Ack) return ClassifyOutcome::Ignored;
  FlowRecord* r = table.find(e.key.reversed());
  if (r == nullptr) {
    ++table.misses;
    return ClassifyOutcome::Ignored;
  }
  const std::uint32_t bytes = e.ack - r->isn;
  if (bytes > r->bytes_acked()) r->latest_ack = e.ack;
  if (r->state != ClassState::PresumedMice) return ClassifyOutcome::Ignored;
  if (r->bytes_acked() > config.threshold_bytes) {
    r->state = ClassState::ClassifiedElephant;
    r->classified_ns = e.ts_ns + config.decision_delay_ns();
    return ClassifyOutcome::NewlyElephant;
  }
  return ClassifyOutcome::StillMice;
}

// Edge-switch capture path of the centralized scheme: handshake/teardown
// packets always, ACKs through a 1-in-S counter on a dedicated ACK
// interface, DATA never. Per-flow stop-capture rules drop ACKs after their
// effective instant.
class EdgeFilter {
 public:
  explicit EdgeFilter(const DetectorConfig& config) : sample_rate_(config.ack_sample_rate) {}

  bool capture(const PacketEvent& e) {
    ++packets_total_;
    bool captured = false;
    if (e.flags == TcpFlags::SynAck || e.flags == TcpFlags::Fin || e.flags == TcpFlags::Rst) {
      captured = true;
    } else if (e.flags == TcpFlags::Ack) {
      auto stop = stop_at_.find(e.key.reversed());
      if (stop == stop_at_.end() || e.ts_ns <= stop->second) {
        captured = (ack_counter_[e.observer]++ % sample_rate_) == 0;
      }
    }
    if (captured) ++packets_captured_;
    return captured;
  }

  void stop_capture(const FlowKey& data_key, std::int64_t effective_ns) {
    auto [it, inserted] = stop_at_.try_emplace(data_key, effective_ns);
    if (!inserted) it->second = std::min(it->second, effective_ns);
  }

  std::uint64_t packets_total() const noexcept { return packets_total_; }
  std::uint64_t packets_captured() const noexcept { return packets_captured_; }

 private:
  std::uint32_t sample_rate_;
  std::unordered_map<std::uint32_t, std::uint64_t> ack_counter_;
  std::unordered_map<FlowKey, std::int64_t, FlowKeyHash> stop_at_;
  std::uint64_t packets_total_ = 0;
  std::uint64_t packets_captured_ = 0;
};

struct DetectionCounters {
  std::uint64_t packets_total = 0;
  std::uint64_t packets_captured = 0;  // headers read in-network / copied to the CU
  std::uint64_t notifications = 0;     // messages received by the CU
  std::uint64_t reconfigurations = 0;  // stop-capture rules pushed to edge switches
};

struct FlowDetection {
  FlowKey key;  // data direction
  bool forward = true;
  FlowClass detected = FlowClass::Mice;
  std::optional<std::int64_t> detect_ns;
  std::int64_t opened_ns = 0;
  std::uint64_t notifications = 0;
  std::uint32_t bytes_acked = 0;
  bool preclassified = false;
};

class Detector {
 public:
  explicit Detector(DetectorConfig config) : config_(std::move(config)), edge_(config_) { config_.validate(); }

  const DetectorConfig& config() const noexcept { return config_; }

  // Packets must be fed in timestamp order.
  void observe(const PacketEvent& e) {
    if (config_.mode == DetectionMode::Centralized) {
      observe_centralized(e);
    } else {
      observe_in_network(e);
    }
  }

  const std::unordered_map<FlowKey, FlowDetection, FlowKeyHash>& detections() const noexcept { return results_; }

  std::optional<FlowDetection> detection(const FlowKey& data_key) const {
    auto it = results_.find(data_key);
    if (it == results_.end()) return std::nullopt;
    return it->second;
  }

  DetectionCounters counters() const {
    DetectionCounters c = counters_;
    if (config_.mode == DetectionMode::Centralized) {
      c.packets_total = edge_.packets_total();
      c.packets_captured = edge_.packets_captured();
    }
    return c;
  }

  const FlowTable& table() const noexcept { return table_; }

 private:
  void observe_in_network(const PacketEvent& e) {
    ++counters_.packets_total;
    if (e.flags == TcpFlags::Data || e.flags == TcpFlags::Syn) return;
    if (e.flags == TcpFlags::Ack) {
      const FlowRecord* r = table_.find(e.key.reversed());
      if (r != nullptr && r->state != ClassState::PresumedMice && suppress_classified(*r)) return;
      ++counters_.packets_captured;
      process(e);
      return;
    }
    ++counters_.packets_captured;
    process(e);
  }

  void observe_centralized(const PacketEvent& e) {
    if (!edge_.capture(e)) return;
    ++counters_.notifications;
    attribute_notification(e);
    process(e);
  }

  bool suppress_classified(const FlowRecord& r) const {
    return r.state == ClassState::PreClassified ? config_.preclassify : config_.stop_useless;
  }

  void attribute_notification(const PacketEvent& e) {
    const FlowKey k = e.flags == TcpFlags::SynAck || e.flags == TcpFlags::Ack ? e.key.reversed() : e.key;
    if (auto it = results_.find(k); it != results_.end()) {
      ++it->second.notifications;
    } else if (auto rit = results_.find(k.reversed()); rit != results_.end()) {
      ++rit->second.notifications;
    } else {
      ++pending_notifications_[k];
    }
  }

  void process(const PacketEvent& e) {
    const std::int64_t delay = config_.decision_delay_ns();
    if (is_handshake_or_teardown(e.flags)) {
      auto res = collector_ingest(table_, e, config_);
      for (const auto& r : res.created) {
        FlowDetection& d = results_[r.key];
        d.key = r.key;
        d.forward = (r.key == e.key.reversed());
        d.opened_ns = r.opened_ns;
        if (auto p = pending_notifications_.find(r.key); p != pending_notifications_.end()) {
          d.notifications += p->second;
          pending_notifications_.erase(p);
        }
        if (r.state == ClassState::PreClassified) {
          d.preclassified = true;
          d.detected = *r.preclass;
          if (*r.preclass == FlowClass::Elephant) d.detect_ns = r.classified_ns;
          if (config_.mode == DetectionMode::Centralized && d.forward) {
            edge_.stop_capture(r.key, e.ts_ns + 2 * delay);
            ++counters_.reconfigurations;
          }
        }
      }
      for (const auto& r : res.closed) {
        if (auto it = results_.find(r.key); it != results_.end()) it->second.bytes_acked = r.bytes_acked();
      }
      return;
    }
    if (e.flags != TcpFlags::Ack) return;
    const auto outcome = classify_ack(table_, e, config_);
    const FlowKey data_key = e.key.reversed();
    auto it = results_.find(data_key);
    if (it == results_.end()) return;
    if (const FlowRecord* r = table_.find(data_key)) it->second.bytes_acked = r->bytes_acked();
    if (outcome == ClassifyOutcome::NewlyElephant) {
      it->second.detected = FlowClass::Elephant;
      it->second.detect_ns = e.ts_ns + delay;
      if (config_.mode == DetectionMode::InNetwork) {
        ++counters_.notifications;  // detection report to the CU
        ++it->second.notifications;
      } else if (config_.stop_useless) {
        edge_.stop_capture(data_key, e.ts_ns + 2 * delay);
        ++counters_.reconfigurations;
      }
    }
  }

  DetectorConfig config_;
  EdgeFilter edge_;
  FlowTable table_;
  DetectionCounters counters_;
  std::unordered_map<FlowKey, FlowDetection, FlowKeyHash> results_;
  std::unordered_map<FlowKey, std::uint64_t, FlowKeyHash> pending_notifications_;
};

// The centralized capture path as a stream transform: the packets the edge
// switches send to the central unit, in order.
inline std::vector<PacketEvent> edge_filter(std::span<const PacketEvent> events, DetectorConfig config) {
  config.mode = DetectionMode::Centralized;
  config.validate();
  EdgeFilter edge(config);
  FlowTable table;
  std::vector<PacketEvent> out;
  const std::int64_t delay = config.notification_delay_ns;
  for (const auto& e : events) {
    if (!edge.capture(e)) continue;
    out.push_back(e);
    if (is_handshake_or_teardown(e.flags)) {
      auto res = collector_ingest(table, e, config);
      for (const auto& r : res.created) {
        if (r.state == ClassState::PreClassified && r.key == e.key.reversed()) {
          edge.stop_capture(r.key, e.ts_ns + 2 * delay);
        }
      }
    } else if (classify_ack(table, e, config) == ClassifyOutcome::NewlyElephant && config.stop_useless) {
      edge.stop_capture(e.key.reversed(), e.ts_ns + 2 * delay);
    }
  }
  return out;
}

// Random 1-in-S packet sampling over every packet with size estimation.
class SamplingBaseline {
 public:
  SamplingBaseline(std::uint32_t sample_rate, std::uint64_t threshold_bytes, std::uint64_t seed)
      : sample_rate_(sample_rate), threshold_(threshold_bytes), rng_(seed) {
    if (sample_rate_ < 1) throw ConfigError("sampling rate must be >= 1");
    draw_gap();
  }

  void observe(const PacketEvent& e) {
    ++counters_.packets_total;
    if (gap_ > 0) {
      --gap_;
      return;
    }
    draw_gap();
    ++counters_.packets_captured;
    ++counters_.notifications;
    auto& est = estimates_[e.key];
    est.key = e.key;
    ++est.notifications;
    est.estimated_bytes += static_cast<std::uint64_t>(sample_rate_) * e.len;
    if (!est.detect_ns && est.estimated_bytes > threshold_) est.detect_ns = e.ts_ns;
  }

  struct Estimate {
    FlowKey key;
    std::uint64_t estimated_bytes = 0;
    std::uint64_t notifications = 0;
    std::optional<std::int64_t> detect_ns;
  };

  std::optional<Estimate> estimate(const FlowKey& k) const {
    auto it = estimates_.find(k);
    if (it == estimates_.end()) return std::nullopt;
    return it->second;
  }

  const std::unordered_map<FlowKey, Estimate, FlowKeyHash>& estimates() const noexcept { return estimates_; }
  const DetectionCounters& counters() const noexcept { return counters_; }

 private:
  // Packets skipped before the next sample: geometric with p = 1/S, which is
  // an independent 1/S coin per packet.
  void draw_gap() {
    if (sample_rate_ == 1) {
      gap_ = 0;
      return;
    }
    std::geometric_distribution<std::uint64_t> g(1.0 / sample_rate_);
    gap_ = g(rng_);
  }

  std::uint32_t sample_rate_;
  std::uint64_t threshold_;
  std::mt19937_64 rng_;
  std::uint64_t gap_ = 0;
  std::unordered_map<FlowKey, Estimate, FlowKeyHash> estimates_;
  DetectionCounters counters_;
};

// ---------------------------------------------------------------------------
// Ground truth and metrics

struct GroundTruth {
  std::string label;
  FlowClass cls = FlowClass::Mice;
  std::int64_t start_ns = 0;
  std::uint64_t bytes = 0;
};

using GroundTruthMap = std::map<FlowKey, GroundTruth>;

// Truth for a replayed trace: per data direction, the larger of the DATA
// payload seen and the bytes finally acknowledged. Reverse directions that
// carried nothing are left out.
inline GroundTruthMap ground_truth_from_trace(std::span<const PacketEvent> events, std::uint64_t threshold_bytes) {
  std::map<FlowKey, std::uint32_t> baseline;
  std::map<FlowKey, std::uint64_t> payload;
  std::map<FlowKey, std::uint32_t> acked;
  std::map<FlowKey, std::int64_t> start;
  for (const auto& e : events) {
    const FlowKey fwd = e.flags == TcpFlags::SynAck ? e.key.reversed() : e.key;
    if (e.flags == TcpFlags::Syn || e.flags == TcpFlags::SynAck) {
      start.try_emplace(fwd, e.ts_ns);
      start.try_emplace(fwd.reversed(), e.ts_ns);
    }
    if (e.flags == TcpFlags::SynAck) {
      baseline[e.key.reversed()] = e.ack;
      baseline[e.key] = e.seq + 1U;
    } else if (e.flags == TcpFlags::Data) {
      payload[e.key] += e.len;
      start.try_emplace(e.key, e.ts_ns);
    } else if (e.flags == TcpFlags::Ack) {
      const FlowKey data = e.key.reversed();
      if (auto b = baseline.find(data); b != baseline.end()) {
        auto& a = acked[data];
        a = std::max(a, e.ack - b->second);
      }
    }
  }
  GroundTruthMap truth;
  auto add = [&](const FlowKey& k, bool forward) {
    const std::uint64_t bytes = std::max<std::uint64_t>(payload.count(k) ? payload[k] : 0, acked.count(k) ? acked[k] : 0);
    if (!forward && bytes == 0) return;
    GroundTruth g;
    g.label = k.to_string();
    g.bytes = bytes;
    g.cls = bytes > threshold_bytes ? FlowClass::Elephant : FlowClass::Mice;
    g.start_ns = start.count(k) ? start[k] : 0;
    truth[k] = g;
  };
  for (const auto& e : events) {
    if (e.flags == TcpFlags::SynAck) {
      if (!truth.contains(e.key.reversed())) add(e.key.reversed(), true);
    }
  }
  for (const auto& [k, bytes] : payload) {
    if (!truth.contains(k)) add(k, true);
  }
  for (const auto& e : events) {
    if (e.flags == TcpFlags::SynAck && !truth.contains(e.key)) add(e.key, false);
  }
  return truth;
}

struct FlowVerdict {
  FlowKey key;
  std::string label;
  FlowClass truth = FlowClass::Mice;
  FlowClass detected = FlowClass::Mice;
  std::optional<std::int64_t> detect_ns;
  std::uint64_t notifications = 0;
  std::optional<std::int64_t> latency_ns;
};

struct DetectionMetrics {
  std::size_t mice = 0;
  std::size_t elephants = 0;
  std::size_t true_negatives = 0;   // elephant taken for a mouse
  std::size_t false_positives = 0;  // mouse taken for an elephant
  double true_negative_rate = 0.0;
  double false_positive_rate = 0.0;
  double accuracy = 1.0;
  double mean_latency_ns = 0.0;
  DetectionCounters counters;
  std::vector<FlowVerdict> flows;  // ordered by flow key
};

namespace detail {

inline DetectionMetrics finish_metrics(std::vector<FlowVerdict> flows, const DetectionCounters& counters) {
  DetectionMetrics m;
  m.counters = counters;
  double latency_sum = 0.0;
  std::size_t latency_n = 0;
  for (auto& v : flows) {
    if (v.truth == FlowClass::Elephant) {
      ++m.elephants;
      if (v.detected != FlowClass::Elephant) ++m.true_negatives;
    } else {
      ++m.mice;
      if (v.detected == FlowClass::Elephant) ++m.false_positives;
    }
    if (v.latency_ns) {
      latency_sum += static_cast<double>(*v.latency_ns);
      ++latency_n;
    }
  }
  m.true_negative_rate = m.elephants ? static_cast<double>(m.true_negatives) / m.elephants : 0.0;
  m.false_positive_rate = m.mice ? static_cast<double>(m.false_positives) / m.mice : 0.0;
  const std::size_t total = m.mice + m.elephants;
  m.accuracy = total ? 1.0 - static_cast<double>(m.true_negatives + m.false_positives) / total : 1.0;
  m.mean_latency_ns = latency_n ? latency_sum / latency_n : 0.0;
  m.flows = std::move(flows);
  return m;
}

}  // namespace detail

inline DetectionMetrics detection_metrics(const Detector& detector, const GroundTruthMap& truth) {
  std::vector<FlowVerdict> flows;
  for (const auto& [key, t] : truth) {
    FlowVerdict v;
    v.key = key;
    v.label = t.label;
    v.truth = t.cls;
    if (auto d = detector.detection(key)) {
      v.detected = d->detected;
      v.detect_ns = d->detect_ns;
      v.notifications = d->notifications;
      if (d->detect_ns && d->detected == FlowClass::Elephant) v.latency_ns = *d->detect_ns - t.start_ns;
    }
    flows.push_back(std::move(v));
  }
  return detail::finish_metrics(std::move(flows), detector.counters());
}

inline DetectionMetrics detection_metrics(const SamplingBaseline& baseline, const GroundTruthMap& truth) {
  std::vector<FlowVerdict> flows;
  for (const auto& [key, t] : truth) {
    FlowVerdict v;
    v.key = key;
    v.label = t.label;
    v.truth = t.cls;
    if (auto est = baseline.estimate(key)) {
      v.notifications = est->notifications;
      if (est->detect_ns) {
        v.detected = FlowClass::Elephant;
        v.detect_ns = est->detect_ns;
        v.latency_ns = *est->detect_ns - t.start_ns;
      }
    }
    flows.push_back(std::move(v));
  }
  return detail::finish_metrics(std::move(flows), baseline.counters());
}

inline constexpr std::string_view kDetectionHeader = "flow_id,true_class,detected_class,detect_ts_ns,notifications";

inline void write_detection_csv(std::ostream& os, const DetectionMetrics& m) {
  os << kDetectionHeader << '\n';
  for (const auto& v : m.flows) {
    os << v.label << ',' << to_string(v.truth) << ',' << to_string(v.detected) << ',';
    if (v.detect_ns) os << *v.detect_ns;
    os << ',' << v.notifications << '\n';
  }
}

}  // namespace lightfdg
