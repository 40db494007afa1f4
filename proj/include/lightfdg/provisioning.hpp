#pragma once

// R2R lightpath provisioning.
//
// For each ordered rack pair and class, the demanded capacity is turned into
// a per-link intensity, links that cannot carry it are pruned, the k widest
// leaf->spine->leaf paths are ranked by (bottleneck intensity x number of
// wavelengths free on every link of the path), the best one is taken and a
// wavelength is drawn uniformly from its common free set. MF lightpaths are
// provisioned for every pair before any EF lightpath.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "lightfdg/errors.hpp"
#include "lightfdg/optics.hpp"
#include "lightfdg/topology.hpp"
#include "lightfdg/types.hpp"
#include "lightfdg/widest_paths.hpp"

namespace lightfdg {

inline constexpr int kDefaultKPaths = 4;

// C = Lambda * F / tau. Lambda in flows/s, F in bits, tau in seconds.
inline double required_capacity(double arrival_rate, double flow_size_bits, double deadline_s) {
  if (!std::isfinite(arrival_rate) || arrival_rate < 0.0 || !std::isfinite(flow_size_bits) ||
      flow_size_bits < 0.0) {
    throw std::domain_error("arrival rate and flow size must be finite and >= 0");
  }
  if (!std::isfinite(deadline_s) || !(deadline_s > 0.0)) {
    throw std::domain_error("completion deadline must be finite and > 0");
  }
  return arrival_rate * flow_size_bits / deadline_s;
}

class DemandMatrix {
 public:
  struct ClassDemand {
    double flow_size_bits = 0.0;
    double deadline_s = 1.0;
    std::vector<double> arrival_rate;                 // row-major N x N
    std::vector<std::optional<double>> override_bps;  // row-major N x N
  };

  DemandMatrix() = default;
  explicit DemandMatrix(int racks) : racks_(racks) {
    for (auto& c : classes_) {
      c.arrival_rate.assign(static_cast<std::size_t>(racks) * racks, 0.0);
      c.override_bps.assign(static_cast<std::size_t>(racks) * racks, std::nullopt);
    }
  }

  int racks() const noexcept { return racks_; }

  void set_class_parameters(FlowClass cls, double flow_size_bits, double deadline_s) {
    if (!(deadline_s > 0.0)) throw std::domain_error("completion deadline must be > 0");
    if (flow_size_bits < 0.0) throw std::domain_error("flow size must be >= 0");
    auto& c = classes_[class_index(cls)];
    c.flow_size_bits = flow_size_bits;
    c.deadline_s = deadline_s;
  }

  void set_rate(int i, int j, FlowClass cls, double rate) {
    if (rate < 0.0 || !std::isfinite(rate)) throw std::domain_error("arrival rate must be >= 0");
    if (i == j && rate != 0.0) throw std::domain_error("diagonal demand entries must be zero");
    classes_[class_index(cls)].arrival_rate.at(index(i, j)) = rate;
  }

  // Pins the pair's demand in bits/s, bypassing Lambda*F/tau.
  void set_capacity_override(int i, int j, FlowClass cls, double bps) {
    if (bps < 0.0 || !std::isfinite(bps)) throw std::domain_error("demand must be >= 0");
    if (i == j && bps != 0.0) throw std::domain_error("diagonal demand entries must be zero");
    classes_[class_index(cls)].override_bps.at(index(i, j)) = bps;
  }

  double rate(int i, int j, FlowClass cls) const { return classes_[class_index(cls)].arrival_rate.at(index(i, j)); }
  const ClassDemand& class_demand(FlowClass cls) const { return classes_[class_index(cls)]; }

  double capacity_bps(int i, int j, FlowClass cls) const {
    const auto& c = classes_[class_index(cls)];
    if (const auto& o = c.override_bps.at(index(i, j))) return *o;
    return required_capacity(c.arrival_rate.at(index(i, j)), c.flow_size_bits, c.deadline_s);
  }

  bool all_zero() const {
    for (FlowClass cls : kProvisionedClasses) {
      for (int i = 0; i < racks_; ++i) {
        for (int j = 0; j < racks_; ++j) {
          if (capacity_bps(i, j, cls) > 0.0) return false;
        }
      }
    }
    return true;
  }

 private:
  std::size_t index(int i, int j) const {
    if (i < 0 || j < 0 || i >= racks_ || j >= racks_) throw ContractError("rack index out of range");
    return static_cast<std::size_t>(i) * racks_ + j;
  }

  int racks_ = 0;
  ClassDemand classes_[2];
};

class InfeasibleDemandError : public InfeasibleError {
 public:
  InfeasibleDemandError(int src, int dst, FlowClass cls, double demand_bps, std::string detail)
      : InfeasibleError(format(src, dst, cls, demand_bps, detail)), src_(src), dst_(dst), cls_(cls) {}

  int src() const noexcept { return src_; }
  int dst() const noexcept { return dst_; }
  FlowClass cls() const noexcept { return cls_; }

 private:
  static std::string format(int src, int dst, FlowClass cls, double demand_bps, const std::string& detail) {
    std::ostringstream os;
    os << "cannot provision " << to_string(cls) << " lightpath rack " << src << " -> rack " << dst << " for "
       << demand_bps << " bit/s: " << detail;
    return os.str();
  }

  int src_;
  int dst_;
  FlowClass cls_;
};

struct ProvisioningResult {
  std::vector<Lightpath> lightpaths;  // indexed by LightpathId
  VirtualTopology mice_view;
  VirtualTopology elephant_view;
  int racks = 0;

  std::optional<LightpathId> find(int src, int dst, FlowClass cls) const {
    for (const auto& lp : lightpaths) {
      if (lp.src == src && lp.dst == dst && lp.cls == cls) return lp.id;
    }
    return std::nullopt;
  }

  std::size_t count(FlowClass cls) const {
    return static_cast<std::size_t>(
        std::count_if(lightpaths.begin(), lightpaths.end(), [cls](const Lightpath& l) { return l.cls == cls; }));
  }
};

namespace detail {

// Per-link intensity for a demand, nudged up so the resulting capacity is
// never below the demand after rounding.
inline double intensity_for_demand(const ChannelGain& gain, double demand_bps, double bandwidth_hz) {
  double e = intensity_for_capacity(gain, demand_bps, bandwidth_hz);
  while (wavelength_capacity(gain, e, bandwidth_hz) < demand_bps) {
    e = std::nextafter(e, std::numeric_limits<double>::infinity());
  }
  return e;
}

inline std::vector<int> common_free_wavelengths(const PhysicalTopology& topo, const std::vector<int>& path) {
  std::vector<int> common;
  for (int w = 0; w < topo.wavelengths(); ++w) {
    bool free_everywhere = true;
    for (std::size_t h = 0; h + 1 < path.size(); ++h) {
      if (!topo.link(topo.link_between(path[h], path[h + 1])).is_free(w)) {
        free_everywhere = false;
        break;
      }
    }
    if (free_everywhere) common.push_back(w);
  }
  return common;
}

}  // namespace detail

// Provisions one lightpath and applies its reservations to `topo`. Nothing is
// reserved when no candidate survives pruning.
template <class Rng>
Lightpath provision_lightpath(PhysicalTopology& topo, int src, int dst, FlowClass cls, double demand_bps, int k,
                              Rng& rng, LightpathId id) {
  if (!topo.is_leaf(src) || !topo.is_leaf(dst) || src == dst) {
    throw ContractError("lightpaths connect two distinct racks");
  }
  if (!(demand_bps > 0.0)) throw ContractError("lightpath demand must be > 0");
  if (k < 1) throw ContractError("k must be >= 1");

  // (a)+(b): required intensity per link, prune links that cannot carry it.
  std::vector<double> need(topo.links().size());
  WidthGraph g(topo.node_count());
  double widest_residual = 0.0;
  int links_with_free_wavelength = 0;
  for (const Link& l : topo.links()) {
    need[l.id] = detail::intensity_for_demand(l.gain, demand_bps, topo.bandwidth_hz());
    const double residual = topo.residual(l.id);
    widest_residual = std::max(widest_residual, residual);
    if (l.free_count() > 0) ++links_with_free_wavelength;
    if (residual >= need[l.id] && l.free_count() > 0) g.add_edge(l.from, l.to, residual);
  }
  for (int leaf = 0; leaf < topo.leaf_count(); ++leaf) g.set_transit(leaf, false);

  // (c)-(e): rank candidates by width x continuity-feasible wavelength count.
  const auto candidates = k_widest_paths(g, src, dst, k);
  const WidePath* chosen = nullptr;
  std::vector<int> chosen_free;
  double best_score = 0.0;
  for (const auto& p : candidates) {
    auto free = detail::common_free_wavelengths(topo, p.nodes);
    const double score = p.width * static_cast<double>(free.size());
    if (free.empty() || !(score > 0.0)) continue;
    if (chosen == nullptr || score > best_score || (score == best_score && p.nodes < chosen->nodes)) {
      chosen = &p;
      chosen_free = std::move(free);
      best_score = score;
    }
  }
  if (chosen == nullptr) {
    std::ostringstream os;
    os << candidates.size() << " candidate path(s) after pruning, none with a continuity-free wavelength"
       << "; required intensity " << need[topo.link_between(src, topo.spine_node(0))] << ", widest residual "
       << widest_residual << ", links with a free wavelength " << links_with_free_wavelength;
    throw InfeasibleDemandError(src, dst, cls, demand_bps, os.str());
  }

  // (f): uniform wavelength draw from the common free set.
  std::uniform_int_distribution<std::size_t> pick(0, chosen_free.size() - 1);
  const int wavelength = chosen_free[pick(rng)];

  Lightpath lp;
  lp.id = id;
  lp.cls = cls;
  lp.src = src;
  lp.dst = dst;
  lp.path = chosen->nodes;
  lp.wavelength = wavelength;
  lp.demand_bps = demand_bps;
  lp.capacity_bps = std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h + 1 < lp.path.size(); ++h) {
    const LinkId l = topo.link_between(lp.path[h], lp.path[h + 1]);
    lp.links.push_back(l);
    lp.intensity.push_back(need[l]);
    lp.capacity_bps =
        std::min(lp.capacity_bps, wavelength_capacity(topo.link(l).gain, need[l], topo.bandwidth_hz()));
  }

  // (g): all-or-nothing reservation.
  std::size_t applied = 0;
  try {
    for (; applied < lp.links.size(); ++applied) {
      topo.reserve(lp.links[applied], wavelength, lp.intensity[applied], id);
    }
  } catch (...) {
    for (std::size_t r = 0; r < applied; ++r) topo.release(lp.links[r], wavelength);
    throw;
  }
  return lp;
}

inline Lightpath provision_lightpath(PhysicalTopology& topo, int src, int dst, FlowClass cls, double demand_bps,
                                     int k, std::uint64_t seed, LightpathId id = 0) {
  std::mt19937_64 rng(seed);
  return provision_lightpath(topo, src, dst, cls, demand_bps, k, rng, id);
}

// MF pass over all ordered pairs (row-major), then the EF pass on what is
// left. `topo` is only modified when every lightpath succeeds.
inline ProvisioningResult provision_all(PhysicalTopology& topo, const DemandMatrix& demands, int k,
                                        std::uint64_t seed) {
  if (demands.racks() != topo.leaf_count()) {
    throw ContractError("demand matrix size does not match the number of racks");
  }
  const double ratio = static_cast<double>(topo.spine_count()) / topo.leaf_count();
  const int required = min_wavelengths(topo.leaf_count(), ratio);
  if (topo.wavelengths() < required) throw WavelengthBoundError(required, topo.wavelengths());

  PhysicalTopology work = topo;
  std::mt19937_64 rng(seed);
  ProvisioningResult result;
  result.racks = topo.leaf_count();
  std::vector<LightpathId> per_class[2];

  for (FlowClass cls : kProvisionedClasses) {
    for (int i = 0; i < topo.leaf_count(); ++i) {
      for (int j = 0; j < topo.leaf_count(); ++j) {
        if (i == j) continue;
        const double demand = demands.capacity_bps(i, j, cls);
        if (!(demand > 0.0)) continue;
        const auto id = static_cast<LightpathId>(result.lightpaths.size());
        result.lightpaths.push_back(provision_lightpath(work, i, j, cls, demand, k, rng, id));
        per_class[class_index(cls)].push_back(id);
      }
    }
  }

  result.mice_view = residual_view(work, FlowClass::Mice, per_class[0]);
  result.elephant_view = residual_view(work, FlowClass::Elephant, per_class[1]);
  topo = std::move(work);
  return result;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json lightpath_to_json(const Lightpath& lp) {
  return {{"id", lp.id},
          {"class", std::string(to_string(lp.cls))},
          {"src", lp.src},
          {"dst", lp.dst},
          {"path", lp.path},
          {"links", lp.links},
          {"intensity", lp.intensity},
          {"wavelength", lp.wavelength},
          {"demand_bps", lp.demand_bps},
          {"capacity_bps", lp.capacity_bps}};
}

inline Lightpath lightpath_from_json(const nlohmann::json& j) {
  Lightpath lp;
  lp.id = j.at("id").get<LightpathId>();
  lp.cls = parse_flow_class(j.at("class").get<std::string>());
  lp.src = j.at("src").get<int>();
  lp.dst = j.at("dst").get<int>();
  lp.path = j.at("path").get<std::vector<int>>();
  lp.links = j.at("links").get<std::vector<int>>();
  lp.intensity = j.at("intensity").get<std::vector<double>>();
  lp.wavelength = j.at("wavelength").get<int>();
  lp.demand_bps = j.at("demand_bps").get<double>();
  lp.capacity_bps = j.at("capacity_bps").get<double>();
  return lp;
}

inline nlohmann::json provisioning_to_json(const ProvisioningResult& r, const PhysicalTopology& topo) {
  nlohmann::json lps = nlohmann::json::array();
  for (const auto& lp : r.lightpaths) lps.push_back(lightpath_to_json(lp));
  return {{"racks", r.racks},
          {"mice_lightpaths", r.count(FlowClass::Mice)},
          {"elephant_lightpaths", r.count(FlowClass::Elephant)},
          {"lightpaths", std::move(lps)},
          {"topology", topology_to_json(topo)}};
}

inline std::string provisioning_summary(const ProvisioningResult& r) {
  std::ostringstream os;
  os << "class src dst path wavelength intensity capacity_bps demand_bps\n";
  for (const auto& lp : r.lightpaths) {
    os << to_string(lp.cls) << ' ' << lp.src << ' ' << lp.dst << ' ';
    for (std::size_t h = 0; h < lp.path.size(); ++h) os << (h ? "-" : "") << lp.path[h];
    os << ' ' << lp.wavelength << ' ' << (lp.intensity.empty() ? 0.0 : lp.intensity.front()) << ' '
       << lp.capacity_bps << ' ' << lp.demand_bps << '\n';
  }
  os << "total " << r.lightpaths.size() << " lightpaths (" << r.count(FlowClass::Mice) << " MF, "
     << r.count(FlowClass::Elephant) << " EF)\n";
  return os.str();
}

}  // namespace lightfdg
