#pragma once

// Three-step optical grooming, run separately per class.
//
//   S2S: flows from server s to server t       -> lambda_ij^st
//   S2R: S2S flows from s into rack j          -> lambda_ij^s = sum_t lambda_ij^st
//   R2R: S2R flows from rack i into rack j     -> Lambda_ij   = sum_s sum_t lambda_ij^st
//
// Composite rates are plain sums since independent Poisson arrivals
// superpose. Intra-rack flows never reach the optical fabric and are
// reported separately.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lightfdg/errors.hpp"
#include "lightfdg/provisioning.hpp"
#include "lightfdg/types.hpp"

namespace lightfdg {

using FlowId = std::int64_t;

struct FlowDescriptor {
  FlowId id = 0;
  FlowClass cls = FlowClass::Unknown;
  int src_server = 0;  // global server index
  int dst_server = 0;
  double rate = 0.0;   // arrival rate of this flow's S2S stream, flows/s
  std::uint64_t size_bytes = 1;
  double arrival_s = 0.0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 5001;

  friend bool operator==(const FlowDescriptor&, const FlowDescriptor&) = default;
};

// Servers are numbered rack-major: server = rack * hosts_per_rack + host.
struct RackMap {
  int racks = 0;
  int hosts_per_rack = 1;

  int rack_of(int server) const {
    if (server < 0 || server >= racks * hosts_per_rack) {
      throw ContractError("server " + std::to_string(server) + " outside the declared racks");
    }
    return server / hosts_per_rack;
  }
  int host_of(int server) const { return server % hosts_per_rack; }
  int server(int rack, int host) const { return rack * hosts_per_rack + host; }
  int servers() const { return racks * hosts_per_rack; }
};

enum class GroomingLevel { S2S, S2R, R2R };

inline std::string_view to_string(GroomingLevel l) {
  switch (l) {
    case GroomingLevel::S2S: return "S2S";
    case GroomingLevel::S2R: return "S2R";
    case GroomingLevel::R2R: return "R2R";
  }
  return "?";
}

struct GroomedAggregate {
  GroomingLevel level = GroomingLevel::S2S;
  FlowClass cls = FlowClass::Mice;
  int src = 0;  // server (S2S, S2R) or rack (R2R)
  int dst = 0;  // server (S2S) or rack (S2R, R2R)
  double rate = 0.0;
  std::vector<FlowId> members;
};

struct GroomingResult {
  std::vector<GroomedAggregate> s2s;
  std::vector<GroomedAggregate> s2r;
  std::vector<GroomedAggregate> r2r;
  std::vector<FlowId> intra_rack;
};

inline double compose_rate(std::span<const double> rates) {
  for (double r : rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::domain_error("arrival rates must be finite and >= 0");
  }
  return std::accumulate(rates.begin(), rates.end(), 0.0);
}

namespace detail {

template <class Key>
std::vector<GroomedAggregate> fold_level(const std::map<Key, std::vector<const GroomedAggregate*>>& groups,
                                         GroomingLevel level) {
  std::vector<GroomedAggregate> out;
  out.reserve(groups.size());
  for (const auto& [key, parts] : groups) {
    GroomedAggregate agg;
    agg.level = level;
    agg.cls = std::get<0>(key);
    agg.src = std::get<1>(key);
    agg.dst = std::get<2>(key);
    std::vector<double> rates;
    for (const auto* p : parts) {
      rates.push_back(p->rate);
      agg.members.insert(agg.members.end(), p->members.begin(), p->members.end());
    }
    agg.rate = compose_rate(rates);
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace detail

inline GroomingResult groom_three_step(std::span<const FlowDescriptor> flows, const RackMap& racks) {
  using Key = std::tuple<FlowClass, int, int>;
  GroomingResult result;

  std::map<Key, std::vector<const FlowDescriptor*>> by_server_pair;
  for (const auto& f : flows) {
    if (f.cls != FlowClass::Mice && f.cls != FlowClass::Elephant) {
      throw ContractError("flow " + std::to_string(f.id) + " has no class; grooming needs classified flows");
    }
    if (racks.rack_of(f.src_server) == racks.rack_of(f.dst_server)) {
      result.intra_rack.push_back(f.id);
      continue;
    }
    by_server_pair[{f.cls, f.src_server, f.dst_server}].push_back(&f);
  }

  for (const auto& [key, members] : by_server_pair) {
    GroomedAggregate agg;
    agg.level = GroomingLevel::S2S;
    agg.cls = std::get<0>(key);
    agg.src = std::get<1>(key);
    agg.dst = std::get<2>(key);
    std::vector<double> rates;
    for (const auto* f : members) {
      rates.push_back(f->rate);
      agg.members.push_back(f->id);
    }
    agg.rate = compose_rate(rates);
    result.s2s.push_back(std::move(agg));
  }

  std::map<Key, std::vector<const GroomedAggregate*>> by_server_rack;
  for (const auto& a : result.s2s) by_server_rack[{a.cls, a.src, racks.rack_of(a.dst)}].push_back(&a);
  result.s2r = detail::fold_level(by_server_rack, GroomingLevel::S2R);

  std::map<Key, std::vector<const GroomedAggregate*>> by_rack_pair;
  for (const auto& a : result.s2r) by_rack_pair[{a.cls, racks.rack_of(a.src), a.dst}].push_back(&a);
  result.r2r = detail::fold_level(by_rack_pair, GroomingLevel::R2R);
  return result;
}

// Fills Lambda from the R2R aggregates; pairs without an aggregate stay at 0.
inline DemandMatrix demand_matrix_from_aggregates(std::span<const GroomedAggregate> r2r, int racks,
                                                  double mice_size_bits, double mice_deadline_s,
                                                  double elephant_size_bits, double elephant_deadline_s) {
  DemandMatrix m(racks);
  m.set_class_parameters(FlowClass::Mice, mice_size_bits, mice_deadline_s);
  m.set_class_parameters(FlowClass::Elephant, elephant_size_bits, elephant_deadline_s);
  for (const auto& a : r2r) {
    if (a.level != GroomingLevel::R2R) throw ContractError("demand matrix is built from R2R aggregates");
    m.set_rate(a.src, a.dst, a.cls, m.rate(a.src, a.dst, a.cls) + a.rate);
  }
  return m;
}

}  // namespace lightfdg
