#pragma once

// Two-tier WDM-FSO spine-leaf fabric.
//
// Nodes 0..N-1 are leaf edge switches (one per rack), nodes N..N+S-1 are
// spine core switches. Every leaf has a directed link to and from every
// spine. Each directed link carries W wavelength slots and an intensity
// budget E_T that the lightpaths crossing it draw from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lightfdg/errors.hpp"
#include "lightfdg/optics.hpp"
#include "lightfdg/types.hpp"

namespace lightfdg {

using NodeId = int;
using LinkId = int;
using LightpathId = std::int32_t;

inline constexpr LightpathId kFreeSlot = -1;

struct Link {
  LinkId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  ChannelGain gain;
  std::vector<LightpathId> owner;        // per wavelength, kFreeSlot when free
  std::vector<double> slot_intensity;    // intensity reserved on each wavelength

  int free_count() const {
    return static_cast<int>(std::count(owner.begin(), owner.end(), kFreeSlot));
  }
  bool is_free(int wavelength) const { return owner.at(wavelength) == kFreeSlot; }
  double reserved() const {
    return std::accumulate(slot_intensity.begin(), slot_intensity.end(), 0.0);
  }
};

namespace detail {

inline int exact_spine_count(int leaves, double spine_ratio) {
  const double spines = spine_ratio * leaves;
  const double rounded = std::round(spines);
  if (!std::isfinite(spines) || rounded < 1.0 || std::abs(spines - rounded) > 1e-9 * leaves) {
    throw ConfigError("spine/leaf ratio " + std::to_string(spine_ratio) + " with " +
                      std::to_string(leaves) + " leaves does not give a positive integer spine count");
  }
  return static_cast<int>(rounded);
}

}  // namespace detail

// Least W such that every rack pair can hold one MF and one EF lightpath:
// ceil(2(N-1) / (eta*N)).
inline int min_wavelengths(int leaves, double spine_ratio) {
  const double spines = spine_ratio * leaves;
  const double rounded = std::round(spines);
  if (std::abs(spines - rounded) <= 1e-9 * leaves && rounded >= 1.0) {
    const int s = static_cast<int>(rounded);
    return (2 * (leaves - 1) + s - 1) / s;
  }
  return static_cast<int>(std::ceil(2.0 * (leaves - 1) / spines - 1e-12));
}

class PhysicalTopology {
 public:
  PhysicalTopology() = default;

  PhysicalTopology(int leaves, int spines, OpticalParams optics, ChannelGain gain)
      : leaves_(leaves), spines_(spines), optics_(optics) {
    optics_.validate();
    link_index_.assign(static_cast<std::size_t>(node_count()) * node_count(), -1);
    for (int leaf = 0; leaf < leaves_; ++leaf) {
      for (int s = 0; s < spines_; ++s) {
        add_link(leaf, leaves_ + s, gain);
        add_link(leaves_ + s, leaf, gain);
      }
    }
  }

  int leaf_count() const noexcept { return leaves_; }
  int spine_count() const noexcept { return spines_; }
  int node_count() const noexcept { return leaves_ + spines_; }
  int wavelengths() const noexcept { return optics_.wavelengths_per_link; }
  double intensity_budget() const noexcept { return optics_.intensity_budget; }
  double bandwidth_hz() const noexcept { return optics_.bandwidth_hz; }
  const OpticalParams& optics() const noexcept { return optics_; }

  bool is_leaf(NodeId n) const noexcept { return n >= 0 && n < leaves_; }
  bool is_spine(NodeId n) const noexcept { return n >= leaves_ && n < node_count(); }
  NodeId spine_node(int spine_index) const noexcept { return leaves_ + spine_index; }

  const std::vector<Link>& links() const noexcept { return links_; }
  const Link& link(LinkId id) const { return links_.at(id); }
  Link& mutable_link(LinkId id) { return links_.at(id); }

  std::optional<LinkId> find_link(NodeId from, NodeId to) const {
    if (from < 0 || to < 0 || from >= node_count() || to >= node_count()) return std::nullopt;
    const int id = link_index_[static_cast<std::size_t>(from) * node_count() + to];
    if (id < 0) return std::nullopt;
    return id;
  }

  LinkId link_between(NodeId from, NodeId to) const {
    if (auto id = find_link(from, to)) return *id;
    throw ContractError("no link " + std::to_string(from) + "->" + std::to_string(to));
  }

  double residual(LinkId id) const { return optics_.intensity_budget - link(id).reserved(); }

  // Claims `wavelength` on `id` for `owner`. Atomic: on error nothing changes.
  void reserve(LinkId id, int wavelength, double intensity, LightpathId owner) {
    Link& l = links_.at(id);
    if (wavelength < 0 || wavelength >= wavelengths()) {
      throw ContractError("wavelength index " + std::to_string(wavelength) + " out of range");
    }
    if (!(intensity >= 0.0)) throw BudgetError("negative intensity reservation");
    if (!l.is_free(wavelength)) {
      throw CollisionError("wavelength " + std::to_string(wavelength) + " on link " +
                           std::to_string(l.from) + "->" + std::to_string(l.to) +
                           " already owned by lightpath " + std::to_string(l.owner[wavelength]));
    }
    if (l.reserved() + intensity > optics_.intensity_budget) {
      throw BudgetError("link " + std::to_string(l.from) + "->" + std::to_string(l.to) +
                        " residual intensity " + std::to_string(residual(id)) +
                        " below requested " + std::to_string(intensity));
    }
    l.owner[wavelength] = owner;
    l.slot_intensity[wavelength] = intensity;
  }

  void release(LinkId id, int wavelength) {
    Link& l = links_.at(id);
    l.owner.at(wavelength) = kFreeSlot;
    l.slot_intensity.at(wavelength) = 0.0;
  }

  friend bool operator==(const PhysicalTopology& a, const PhysicalTopology& b) {
    if (a.leaves_ != b.leaves_ || a.spines_ != b.spines_ || a.links_.size() != b.links_.size()) return false;
    if (a.optics_.bandwidth_hz != b.optics_.bandwidth_hz ||
        a.optics_.intensity_budget != b.optics_.intensity_budget ||
        a.optics_.wavelengths_per_link != b.optics_.wavelengths_per_link) {
      return false;
    }
    for (std::size_t i = 0; i < a.links_.size(); ++i) {
      const Link& x = a.links_[i];
      const Link& y = b.links_[i];
      if (x.from != y.from || x.to != y.to || !(x.gain == y.gain) || x.owner != y.owner ||
          x.slot_intensity != y.slot_intensity) {
        return false;
      }
    }
    return true;
  }

 private:
  void add_link(NodeId from, NodeId to, const ChannelGain& gain) {
    Link l;
    l.id = static_cast<LinkId>(links_.size());
    l.from = from;
    l.to = to;
    l.gain = gain;
    l.owner.assign(optics_.wavelengths_per_link, kFreeSlot);
    l.slot_intensity.assign(optics_.wavelengths_per_link, 0.0);
    link_index_[static_cast<std::size_t>(from) * node_count() + to] = l.id;
    links_.push_back(std::move(l));
  }

  int leaves_ = 0;
  int spines_ = 0;
  OpticalParams optics_;
  std::vector<Link> links_;
  std::vector<int> link_index_;
};

inline PhysicalTopology build_spine_leaf(int leaves, double spine_ratio, int wavelengths,
                                         const ChannelGain& gain, double intensity_budget,
                                         double bandwidth_hz = 10e9) {
  if (leaves < 2) throw ConfigError("spine-leaf fabric needs at least 2 leaves");
  if (wavelengths < 1) throw ConfigError("need at least one wavelength per link");
  const int spines = detail::exact_spine_count(leaves, spine_ratio);
  OpticalParams optics{bandwidth_hz, intensity_budget, wavelengths};
  try {
    optics.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return PhysicalTopology(leaves, spines, optics, gain);
}

// An R2R lightpath: one wavelength, continuous along a leaf->spine->leaf path.
struct Lightpath {
  LightpathId id = 0;
  FlowClass cls = FlowClass::Mice;
  NodeId src = 0;
  NodeId dst = 0;
  std::vector<NodeId> path;
  std::vector<LinkId> links;
  std::vector<double> intensity;  // per link of `links`
  int wavelength = 0;
  double demand_bps = 0.0;
  double capacity_bps = 0.0;      // min over links of the wavelength capacity

  friend bool operator==(const Lightpath&, const Lightpath&) = default;
};

// Snapshot of what one class may still claim: free wavelengths and residual
// intensity on every link, with leaves as non-transit endpoints.
struct VirtualLink {
  LinkId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  double residual = 0.0;
  std::vector<int> free_wavelengths;
};

struct VirtualTopology {
  FlowClass cls = FlowClass::Mice;
  int leaf_count = 0;
  int node_count = 0;
  std::vector<VirtualLink> links;
  std::vector<LightpathId> lightpaths;  // lightpaths of this class recorded so far

  // Links that can still host a lightpath needing `intensity` on one wavelength.
  std::vector<LinkId> feasible_links(double intensity) const {
    std::vector<LinkId> out;
    for (const auto& l : links) {
      if (!l.free_wavelengths.empty() && l.residual >= intensity && l.residual > 0.0) out.push_back(l.id);
    }
    return out;
  }

  const VirtualLink& link(LinkId id) const { return links.at(id); }
};

inline VirtualTopology residual_view(const PhysicalTopology& topo, FlowClass cls,
                                     std::vector<LightpathId> class_lightpaths = {}) {
  VirtualTopology view;
  view.cls = cls;
  view.leaf_count = topo.leaf_count();
  view.node_count = topo.node_count();
  view.lightpaths = std::move(class_lightpaths);
  view.links.reserve(topo.links().size());
  for (const Link& l : topo.links()) {
    VirtualLink v;
    v.id = l.id;
    v.from = l.from;
    v.to = l.to;
    v.residual = topo.residual(l.id);
    for (int w = 0; w < topo.wavelengths(); ++w) {
      if (l.is_free(w)) v.free_wavelengths.push_back(w);
    }
    view.links.push_back(std::move(v));
  }
  return view;
}

// ---------------------------------------------------------------------------
// JSON fixtures

inline nlohmann::json gain_to_json(const ChannelGain& g) {
  return {{"detector_response", g.detector_response()},
          {"path_loss", g.path_loss()},
          {"turbulence", g.turbulence()},
          {"pointing", g.pointing()}};
}

inline ChannelGain gain_from_json(const nlohmann::json& j) {
  try {
    return ChannelGain::from_factors(j.value("detector_response", 1.0), j.value("path_loss", 1.0),
                                     j.value("turbulence", 1.0), j.value("pointing", 1.0));
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
}

inline nlohmann::json topology_to_json(const PhysicalTopology& topo) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId n = 0; n < topo.node_count(); ++n) {
    nodes.push_back({{"id", n}, {"role", topo.is_leaf(n) ? "leaf" : "spine"}});
  }
  nlohmann::json links = nlohmann::json::array();
  for (const Link& l : topo.links()) {
    links.push_back({{"id", l.id},
                     {"from", l.from},
                     {"to", l.to},
                     {"gain", gain_to_json(l.gain)},
                     {"owner", l.owner},
                     {"slot_intensity", l.slot_intensity}});
  }
  return {{"leaves", topo.leaf_count()},
          {"spines", topo.spine_count()},
          {"wavelengths", topo.wavelengths()},
          {"intensity_budget", topo.intensity_budget()},
          {"bandwidth_hz", topo.bandwidth_hz()},
          {"nodes", std::move(nodes)},
          {"links", std::move(links)}};
}

inline PhysicalTopology topology_from_json(const nlohmann::json& j) {
  try {
    const int leaves = j.at("leaves").get<int>();
    const int spines = j.at("spines").get<int>();
    if (leaves < 2 || spines < 1) throw ConfigError("topology needs >= 2 leaves and >= 1 spine");
    OpticalParams optics{j.at("bandwidth_hz").get<double>(), j.at("intensity_budget").get<double>(),
                         j.at("wavelengths").get<int>()};
    try {
      optics.validate();
    } catch (const std::domain_error& e) {
      throw ConfigError(e.what());
    }
    PhysicalTopology topo(leaves, spines, optics, ChannelGain::unit());
    const auto& links = j.at("links");
    if (links.size() != topo.links().size()) {
      throw ConfigError("topology link count " + std::to_string(links.size()) + " does not match a " +
                        std::to_string(leaves) + "x" + std::to_string(spines) + " full mesh");
    }
    for (const auto& lj : links) {
      const LinkId id = topo.link_between(lj.at("from").get<int>(), lj.at("to").get<int>());
      Link& l = topo.mutable_link(id);
      if (lj.contains("gain")) l.gain = gain_from_json(lj.at("gain"));
      if (lj.contains("owner")) {
        auto owner = lj.at("owner").get<std::vector<LightpathId>>();
        auto intensity = lj.at("slot_intensity").get<std::vector<double>>();
        if (static_cast<int>(owner.size()) != optics.wavelengths_per_link || owner.size() != intensity.size()) {
          throw ConfigError("link occupancy arrays must have one entry per wavelength");
        }
        l.owner = std::move(owner);
        l.slot_intensity = std::move(intensity);
        if (l.reserved() > optics.intensity_budget) {
          throw ConfigError("link " + std::to_string(l.from) + "->" + std::to_string(l.to) +
                            " reserves more than the intensity budget");
        }
      }
    }
    return topo;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("topology JSON: ") + e.what());
  }
}

}  // namespace lightfdg
