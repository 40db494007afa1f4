#pragma once

// Reference computations for the tests. Each one is written from the
// definition, independently of the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lightfdg/lightfdg.hpp"

namespace oracle {

// C = B/2 * log2(1 + e h^2 E^2 / (2 pi)), evaluated with plain log2.
inline double capacity(double h, double e, double b) {
  return b / 2.0 * std::log2(1.0 + std::numbers::e * h * h * e * e / (2.0 * std::numbers::pi));
}

// E = sqrt((2^(2C/B) - 1) * 2 pi / (e h^2)).
inline double intensity(double h, double c, double b) {
  return std::sqrt((std::pow(2.0, 2.0 * c / b) - 1.0) * 2.0 * std::numbers::pi / (std::numbers::e * h * h));
}

inline int min_wavelengths(int n, int spines) { return (2 * (n - 1) + spines - 1) / spines; }

struct Arc {
  int from;
  int to;
  double width;
};

struct Graph {
  int nodes = 0;
  std::vector<Arc> arcs;
  std::vector<bool> transit;  // empty: every node may be passed through
};

struct Path {
  std::vector<int> nodes;
  double width = 0.0;
};

// Every simple src->dst path, by depth-first enumeration.
inline std::vector<Path> all_simple_paths(const Graph& g, int src, int dst) {
  std::map<std::pair<int, int>, double> w;
  for (const auto& a : g.arcs) {
    if (a.from == a.to) continue;
    auto [it, fresh] = w.try_emplace({a.from, a.to}, a.width);
    if (!fresh) it->second = std::max(it->second, a.width);
  }
  std::vector<Path> out;
  std::vector<int> stack{src};
  std::vector<bool> on(g.nodes, false);
  on[src] = true;
  std::function<void(int, double)> dfs = [&](int u, double width) {
    if (u == dst) {
      out.push_back({stack, width});
      return;
    }
    if (u != src && !g.transit.empty() && !g.transit[u]) return;
    for (int v = 0; v < g.nodes; ++v) {
      auto it = w.find({u, v});
      if (it == w.end() || on[v]) continue;
      on[v] = true;
      stack.push_back(v);
      dfs(v, std::min(width, it->second));
      stack.pop_back();
      on[v] = false;
    }
  };
  dfs(src, std::numeric_limits<double>::infinity());
  return out;
}

// Widest first, then fewest hops, then lexicographic node order.
inline std::vector<Path> ranked_paths(const Graph& g, int src, int dst, int k) {
  auto paths = all_simple_paths(g, src, dst);
  std::sort(paths.begin(), paths.end(), [](const Path& a, const Path& b) {
    if (a.width != b.width) return a.width > b.width;
    if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
    return a.nodes < b.nodes;
  });
  if (static_cast<int>(paths.size()) > k) paths.resize(k);
  return paths;
}

// Random digraph with small integer widths so that ties are common.
inline Graph random_graph(std::mt19937_64& rng, int max_nodes) {
  Graph g;
  g.nodes = std::uniform_int_distribution<int>(2, max_nodes)(rng);
  std::bernoulli_distribution edge(std::uniform_real_distribution<double>(0.2, 0.8)(rng));
  std::uniform_int_distribution<int> width(1, 5);
  for (int u = 0; u < g.nodes; ++u) {
    for (int v = 0; v < g.nodes; ++v) {
      if (u != v && edge(rng)) g.arcs.push_back({u, v, static_cast<double>(width(rng))});
    }
  }
  return g;
}

struct ProvisioningAudit {
  int collisions = 0;           // (link, wavelength) claimed by more than one lightpath
  int continuity = 0;           // lightpaths whose links are not one leaf->spine->leaf wavelength path
  int budget = 0;               // links whose summed intensity exceeds E_T
  int capacity = 0;             // lightpaths below their demand
  int topology_mismatch = 0;    // reservations absent from, or extra in, the topology
  std::map<std::string, int> per_class;

  bool clean() const { return collisions + continuity + budget + capacity + topology_mismatch == 0; }
};

// Re-derives every provisioning constraint from the lightpath records alone,
// then cross-checks the topology's slot owners.
inline ProvisioningAudit audit(const lightfdg::ProvisioningResult& r, const lightfdg::PhysicalTopology& topo,
                               const lightfdg::DemandMatrix& demands) {
  using namespace lightfdg;
  ProvisioningAudit a;
  std::map<std::pair<int, int>, int> claims;  // (link, wavelength) -> count
  std::map<int, double> link_sum;
  for (const auto& lp : r.lightpaths) {
    ++a.per_class[std::string(to_string(lp.cls))];
    bool ok = lp.path.size() == 3 && topo.is_leaf(lp.path.front()) && topo.is_spine(lp.path[1]) &&
              topo.is_leaf(lp.path.back()) && lp.path.front() == lp.src && lp.path.back() == lp.dst &&
              lp.links.size() == 2 && lp.intensity.size() == 2 && lp.wavelength >= 0 &&
              lp.wavelength < topo.wavelengths();
    for (std::size_t h = 0; ok && h < lp.links.size(); ++h) {
      const auto& l = topo.link(lp.links[h]);
      ok = l.from == lp.path[h] && l.to == lp.path[h + 1];
    }
    if (!ok) {
      ++a.continuity;
      continue;
    }
    double cap = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < lp.links.size(); ++h) {
      ++claims[{lp.links[h], lp.wavelength}];
      link_sum[lp.links[h]] += lp.intensity[h];
      cap = std::min(cap, capacity(topo.link(lp.links[h]).gain.composite(), lp.intensity[h], topo.bandwidth_hz()));
      if (topo.link(lp.links[h]).owner[lp.wavelength] != lp.id) ++a.topology_mismatch;
    }
    if (cap < demands.capacity_bps(lp.src, lp.dst, lp.cls) * (1.0 - 1e-12)) ++a.capacity;
  }
  for (const auto& [slot, n] : claims) {
    if (n > 1) ++a.collisions;
  }
  for (const auto& [link, sum] : link_sum) {
    if (sum > topo.intensity_budget()) ++a.budget;
  }
  for (const auto& l : topo.links()) {
    for (int w = 0; w < topo.wavelengths(); ++w) {
      if (l.owner[w] != kFreeSlot && !claims.contains({l.id, w})) ++a.topology_mismatch;
    }
  }
  return a;
}

}  // namespace oracle
