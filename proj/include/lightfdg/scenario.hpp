#pragma once

// Scenario files.
//
//   {
//     "seed": 1,
//     "topology": {"leaves": 8, "spine_ratio": "1/2", "wavelengths": 4,
//                  "link_rate_bps": 1e10, "bandwidth_hz": 1e10,
//                  "intensity_budget": null, "gain": {...},
//                  "hosts_per_rack": 40, "k_paths": 4},
//     "traffic":  {"kind": "shuffle", "flows": 1000, "mice_fraction": 0.9,
//                  "mice_size": 50000, "elephant_size": [10000000, 128000000],
//                  "arrival_rate": 5000, "flow_rate": 1, "shuffle_k": 20,
//                  "elephant_fraction": 0.1, "group_size": 0,
//                  "ring_offset": 1, "dst_port": 5001},
//     "demand":   {"mice_deadline_s": 0.001, "elephant_deadline_s": 1,
//                  "min_bps": 1e8, "mice_bps": null, "elephant_bps": null},
//     "network":  {"ecmp_link_ratio": 0.1, "host_link_bps": 1e9,
//                  "ack_quantum_bytes": 65536, "reroute_pause_ns": 0},
//     "detector": {"threshold_bytes": 1048576, "mode": "in-network",
//                  "notification_delay_ns": 200000, "ack_sample_rate": 100,
//                  "stop_useless": true, "preclassify": true,
//                  "port_classes": {"20": "EF", "514": "MF", "123": "MF"}},
//     "packets":  {"mss": 1460, "ack_every": 2, "rate_bps": 1e9,
//                  "control_gap_ns": 1000}
//   }
//
// Every section and key is optional. Unknown keys are rejected. An absent or
// null intensity_budget is sized so that W wavelengths of link_rate/W each
// exactly fill it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lightfdg/detection.hpp"
#include "lightfdg/errors.hpp"
#include "lightfdg/grooming.hpp"
#include "lightfdg/optics.hpp"
#include "lightfdg/provisioning.hpp"
#include "lightfdg/topology.hpp"
#include "lightfdg/traffic.hpp"

namespace lightfdg {

struct TopologyConfig {
  int leaves = 8;
  double spine_ratio = 0.5;
  int wavelengths = 4;
  double link_rate_bps = 10e9;
  double bandwidth_hz = 10e9;
  std::optional<double> intensity_budget;
  ChannelGain gain;
  int hosts_per_rack = 40;
  int k_paths = kDefaultKPaths;

  int spines() const { return detail::exact_spine_count(leaves, spine_ratio); }
  double wavelength_rate_bps() const { return link_rate_bps / wavelengths; }

  double effective_intensity_budget() const {
    if (intensity_budget) return *intensity_budget;
    return wavelengths * intensity_for_capacity(gain, wavelength_rate_bps(), bandwidth_hz);
  }

  PhysicalTopology build() const {
    return build_spine_leaf(leaves, spine_ratio, wavelengths, gain, effective_intensity_budget(), bandwidth_hz);
  }

  RackMap racks() const { return {leaves, hosts_per_rack}; }
};

struct DemandConfig {
  double mice_deadline_s = 1e-3;
  double elephant_deadline_s = 1.0;
  // Demand given to a class lightpath of a pair that carries traffic but no
  // flow of that class.
  double min_bps = 1e8;
  std::optional<double> mice_bps;
  std::optional<double> elephant_bps;
};

struct NetworkConfig {
  double ecmp_link_ratio = 0.1;
  double host_link_bps = 1e9;  // 0 disables host NIC limits
  std::uint64_t ack_quantum_bytes = 64 * 1024;
  std::int64_t reroute_pause_ns = 0;
  bool check_invariants = false;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  TopologyConfig topology;
  TrafficConfig traffic;
  DemandConfig demand;
  NetworkConfig network;
  DetectorConfig detector;
  PacketGenConfig packets;

  RackMap racks() const { return topology.racks(); }

  void validate() const {
    if (topology.leaves < 2) throw ConfigError("topology.leaves must be >= 2");
    if (topology.wavelengths < 1) throw ConfigError("topology.wavelengths must be >= 1");
    topology.spines();
    if (!(topology.link_rate_bps > 0.0)) throw ConfigError("topology.link_rate_bps must be > 0");
    if (!(topology.bandwidth_hz > 0.0)) throw ConfigError("topology.bandwidth_hz must be > 0");
    if (topology.intensity_budget && !(*topology.intensity_budget > 0.0)) {
      throw ConfigError("topology.intensity_budget must be > 0");
    }
    if (topology.k_paths < 1) throw ConfigError("topology.k_paths must be >= 1");
    traffic.validate(racks());
    if (traffic.threshold_bytes != detector.threshold_bytes) {
      throw ConfigError("traffic and detector thresholds differ");
    }
    if (!(demand.mice_deadline_s > 0.0) || !(demand.elephant_deadline_s > 0.0)) {
      throw ConfigError("deadlines must be > 0");
    }
    if (!(demand.min_bps > 0.0)) throw ConfigError("demand.min_bps must be > 0");
    for (const auto& o : {demand.mice_bps, demand.elephant_bps}) {
      if (o && !(*o > 0.0)) throw ConfigError("per-class demand overrides must be > 0");
    }
    if (!(network.ecmp_link_ratio > 0.0)) throw ConfigError("network.ecmp_link_ratio must be > 0");
    if (network.host_link_bps < 0.0) throw ConfigError("network.host_link_bps must be >= 0");
    if (network.ack_quantum_bytes == 0) throw ConfigError("network.ack_quantum_bytes must be > 0");
    if (network.reroute_pause_ns < 0) throw ConfigError("network.reroute_pause_ns must be >= 0");
    detector.validate();
    packets.validate();
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::string& section,
                                std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(section + " must be an object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + section);
  }
}

// Accepts 0.5 or "1/2".
inline double parse_ratio(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return std::stod(s);
      const double num = std::stod(s.substr(0, slash));
      const double den = std::stod(s.substr(slash + 1));
      if (den == 0.0) throw ConfigError("spine_ratio denominator is zero");
      return num / den;
    } catch (const std::logic_error&) {
      throw ConfigError("bad spine_ratio '" + s + "'");
    }
  }
  throw ConfigError("spine_ratio must be a number or a \"p/q\" string");
}

inline SizeRange parse_size(const nlohmann::json& j) {
  if (j.is_number_unsigned()) return {j.get<std::uint64_t>(), j.get<std::uint64_t>()};
  if (j.is_array() && j.size() == 2 && j[0].is_number_unsigned() && j[1].is_number_unsigned()) {
    return {j[0].get<std::uint64_t>(), j[1].get<std::uint64_t>()};
  }
  throw ConfigError("flow size must be a byte count or a [min, max] pair");
}

inline nlohmann::json size_to_json(const SizeRange& r) {
  if (r.fixed()) return r.min;
  return nlohmann::json::array({r.min, r.max});
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
void read(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) {
    if (j.at(key).is_null()) {
      out.reset();
    } else {
      out = j.at(key).get<T>();
    }
  }
}

}  // namespace detail

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  using detail::read;
  ScenarioConfig sc;
  try {
    detail::reject_unknown_keys(j, "scenario", {"seed", "topology", "traffic", "demand", "network", "detector",
                                                "packets", "name", "description"});
    read(j, "seed", sc.seed);

    if (j.contains("topology")) {
      const auto& t = j.at("topology");
      detail::reject_unknown_keys(t, "topology", {"leaves", "spine_ratio", "wavelengths", "link_rate_bps",
                                                  "bandwidth_hz", "intensity_budget", "gain", "hosts_per_rack",
                                                  "k_paths"});
      read(t, "leaves", sc.topology.leaves);
      if (t.contains("spine_ratio")) sc.topology.spine_ratio = detail::parse_ratio(t.at("spine_ratio"));
      read(t, "wavelengths", sc.topology.wavelengths);
      read(t, "link_rate_bps", sc.topology.link_rate_bps);
      read(t, "bandwidth_hz", sc.topology.bandwidth_hz);
      read(t, "intensity_budget", sc.topology.intensity_budget);
      if (t.contains("gain")) {
        detail::reject_unknown_keys(t.at("gain"), "topology.gain",
                                    {"detector_response", "path_loss", "turbulence", "pointing"});
        sc.topology.gain = gain_from_json(t.at("gain"));
      }
      read(t, "hosts_per_rack", sc.topology.hosts_per_rack);
      read(t, "k_paths", sc.topology.k_paths);
    }

    if (j.contains("traffic")) {
      const auto& t = j.at("traffic");
      detail::reject_unknown_keys(t, "traffic", {"kind", "flows", "mice_fraction", "mice_size", "elephant_size",
                                                 "arrival_rate", "flow_rate", "shuffle_k", "elephant_fraction",
                                                 "group_size", "ring_offset", "dst_port"});
      if (t.contains("kind")) sc.traffic.kind = parse_traffic_kind(t.at("kind").get<std::string>());
      read(t, "flows", sc.traffic.flow_count);
      read(t, "mice_fraction", sc.traffic.mice_fraction);
      if (t.contains("mice_size")) sc.traffic.mice_size = detail::parse_size(t.at("mice_size"));
      if (t.contains("elephant_size")) sc.traffic.elephant_size = detail::parse_size(t.at("elephant_size"));
      read(t, "arrival_rate", sc.traffic.arrival_rate);
      read(t, "flow_rate", sc.traffic.flow_rate);
      read(t, "shuffle_k", sc.traffic.shuffle_k);
      read(t, "elephant_fraction", sc.traffic.elephant_fraction);
      read(t, "group_size", sc.traffic.group_size);
      read(t, "ring_offset", sc.traffic.ring_offset);
      read(t, "dst_port", sc.traffic.dst_port);
    }

    if (j.contains("demand")) {
      const auto& d = j.at("demand");
      detail::reject_unknown_keys(d, "demand",
                                  {"mice_deadline_s", "elephant_deadline_s", "min_bps", "mice_bps", "elephant_bps"});
      read(d, "mice_deadline_s", sc.demand.mice_deadline_s);
      read(d, "elephant_deadline_s", sc.demand.elephant_deadline_s);
      read(d, "min_bps", sc.demand.min_bps);
      read(d, "mice_bps", sc.demand.mice_bps);
      read(d, "elephant_bps", sc.demand.elephant_bps);
    }

    if (j.contains("network")) {
      const auto& n = j.at("network");
      detail::reject_unknown_keys(n, "network", {"ecmp_link_ratio", "host_link_bps", "ack_quantum_bytes",
                                                 "reroute_pause_ns", "check_invariants"});
      read(n, "ecmp_link_ratio", sc.network.ecmp_link_ratio);
      read(n, "host_link_bps", sc.network.host_link_bps);
      read(n, "ack_quantum_bytes", sc.network.ack_quantum_bytes);
      read(n, "reroute_pause_ns", sc.network.reroute_pause_ns);
      read(n, "check_invariants", sc.network.check_invariants);
    }

    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      detail::reject_unknown_keys(d, "detector", {"threshold_bytes", "mode", "notification_delay_ns",
                                                  "ack_sample_rate", "stop_useless", "preclassify", "port_classes"});
      read(d, "threshold_bytes", sc.detector.threshold_bytes);
      if (d.contains("mode")) sc.detector.mode = parse_detection_mode(d.at("mode").get<std::string>());
      read(d, "notification_delay_ns", sc.detector.notification_delay_ns);
      read(d, "ack_sample_rate", sc.detector.ack_sample_rate);
      read(d, "stop_useless", sc.detector.stop_useless);
      read(d, "preclassify", sc.detector.preclassify);
      if (d.contains("port_classes")) {
        sc.detector.port_classes.clear();
        for (const auto& [port, cls] : d.at("port_classes").items()) {
          unsigned long p = 0;
          try {
            p = std::stoul(port);
          } catch (const std::logic_error&) {
            throw ConfigError("bad port '" + port + "' in detector.port_classes");
          }
          if (p > 65535) throw ConfigError("port " + port + " out of range");
          const FlowClass c = parse_flow_class(cls.get<std::string>());
          if (c == FlowClass::Unknown) throw ConfigError("port classes must be MF or EF");
          sc.detector.port_classes[static_cast<std::uint16_t>(p)] = c;
        }
      }
    }
    sc.traffic.threshold_bytes = sc.detector.threshold_bytes;

    if (j.contains("packets")) {
      const auto& p = j.at("packets");
      detail::reject_unknown_keys(p, "packets", {"mss", "ack_every", "rate_bps", "control_gap_ns"});
      read(p, "mss", sc.packets.mss);
      read(p, "ack_every", sc.packets.ack_every);
      read(p, "rate_bps", sc.packets.rate_bps);
      read(p, "control_gap_ns", sc.packets.control_gap_ns);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

inline nlohmann::json scenario_to_json(const ScenarioConfig& sc) {
  nlohmann::json ports = nlohmann::json::object();
  for (const auto& [p, c] : sc.detector.port_classes) ports[std::to_string(p)] = std::string(to_string(c));
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {
      {"seed", sc.seed},
      {"topology",
       {{"leaves", sc.topology.leaves},
        {"spine_ratio", sc.topology.spine_ratio},
        {"wavelengths", sc.topology.wavelengths},
        {"link_rate_bps", sc.topology.link_rate_bps},
        {"bandwidth_hz", sc.topology.bandwidth_hz},
        {"intensity_budget", opt(sc.topology.intensity_budget)},
        {"gain", gain_to_json(sc.topology.gain)},
        {"hosts_per_rack", sc.topology.hosts_per_rack},
        {"k_paths", sc.topology.k_paths}}},
      {"traffic",
       {{"kind", std::string(to_string(sc.traffic.kind))},
        {"flows", sc.traffic.flow_count},
        {"mice_fraction", sc.traffic.mice_fraction},
        {"mice_size", detail::size_to_json(sc.traffic.mice_size)},
        {"elephant_size", detail::size_to_json(sc.traffic.elephant_size)},
        {"arrival_rate", sc.traffic.arrival_rate},
        {"flow_rate", sc.traffic.flow_rate},
        {"shuffle_k", sc.traffic.shuffle_k},
        {"elephant_fraction", sc.traffic.elephant_fraction},
        {"group_size", sc.traffic.group_size},
        {"ring_offset", sc.traffic.ring_offset},
        {"dst_port", sc.traffic.dst_port}}},
      {"demand",
       {{"mice_deadline_s", sc.demand.mice_deadline_s},
        {"elephant_deadline_s", sc.demand.elephant_deadline_s},
        {"min_bps", sc.demand.min_bps},
        {"mice_bps", opt(sc.demand.mice_bps)},
        {"elephant_bps", opt(sc.demand.elephant_bps)}}},
      {"network",
       {{"ecmp_link_ratio", sc.network.ecmp_link_ratio},
        {"host_link_bps", sc.network.host_link_bps},
        {"ack_quantum_bytes", sc.network.ack_quantum_bytes},
        {"reroute_pause_ns", sc.network.reroute_pause_ns},
        {"check_invariants", sc.network.check_invariants}}},
      {"detector",
       {{"threshold_bytes", sc.detector.threshold_bytes},
        {"mode", std::string(to_string(sc.detector.mode))},
        {"notification_delay_ns", sc.detector.notification_delay_ns},
        {"ack_sample_rate", sc.detector.ack_sample_rate},
        {"stop_useless", sc.detector.stop_useless},
        {"preclassify", sc.detector.preclassify},
        {"port_classes", ports}}},
      {"packets",
       {{"mss", sc.packets.mss},
        {"ack_every", sc.packets.ack_every},
        {"rate_bps", sc.packets.rate_bps},
        {"control_gap_ns", sc.packets.control_gap_ns}}}};
}

// Parses scenario text; syntax errors report the 1-based line of the
// offending byte.
inline ScenarioConfig parse_scenario(const std::string& text, const std::string& origin = "scenario") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t end = std::min(text.size(), e.byte == 0 ? std::size_t{0} : e.byte - 1);
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n');
    throw ConfigError(origin + ":" + std::to_string(line) + ": JSON syntax error: " + e.what());
  }
  return scenario_from_json(j);
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

}  // namespace lightfdg
