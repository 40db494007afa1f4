#pragma once

// Loop-less k widest paths.
//
// Yen's deviation scheme over a bottleneck metric. Paths are totally ordered
// by (width descending, hop count ascending, node sequence lexicographic);
// the k first paths in that order are returned. Nodes can be marked
// non-transit so they may only appear as a path's endpoints.

#include <algorithm>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "lightfdg/errors.hpp"

namespace lightfdg {

struct WidePath {
  std::vector<int> nodes;
  double width = 0.0;

  int hops() const noexcept { return static_cast<int>(nodes.size()) - 1; }
  friend bool operator==(const WidePath&, const WidePath&) = default;
};

// Strict weak order used for ranking and tie-breaking.
inline bool path_precedes(const WidePath& a, const WidePath& b) {
  if (a.width != b.width) return a.width > b.width;
  if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
  return a.nodes < b.nodes;
}

class WidthGraph {
 public:
  struct Arc {
    int to;
    double width;
  };

  explicit WidthGraph(int nodes) : adj_(nodes), transit_(nodes, true) {}

  int node_count() const noexcept { return static_cast<int>(adj_.size()); }

  // Parallel arcs collapse to the widest one.
  void add_edge(int from, int to, double width) {
    check(from);
    check(to);
    if (from == to) return;
    auto& out = adj_[from];
    auto it = std::lower_bound(out.begin(), out.end(), to, [](const Arc& a, int v) { return a.to < v; });
    if (it != out.end() && it->to == to) {
      it->width = std::max(it->width, width);
    } else {
      out.insert(it, Arc{to, width});
    }
  }

  void set_transit(int node, bool allowed) {
    check(node);
    transit_[node] = allowed;
  }
  bool transit(int node) const { return transit_[node]; }

  const std::vector<Arc>& out(int node) const { return adj_[node]; }

  std::optional<double> width(int from, int to) const {
    const auto& o = adj_[from];
    auto it = std::lower_bound(o.begin(), o.end(), to, [](const Arc& a, int v) { return a.to < v; });
    if (it == o.end() || it->to != to) return std::nullopt;
    return it->width;
  }

 private:
  void check(int n) const {
    if (n < 0 || n >= node_count()) throw ContractError("node id out of range");
  }

  std::vector<std::vector<Arc>> adj_;
  std::vector<bool> transit_;
};

namespace detail {

struct SpurConstraints {
  std::vector<bool> banned_node;
  std::set<std::pair<int, int>> banned_arc;
};

// Best path from src to dst under the ranking, with the width clamped at `cap`
// (the width of the root prefix already fixed by the caller).
inline std::optional<WidePath> best_capped_path(const WidthGraph& g, int src, int dst, double cap,
                                                const SpurConstraints& c) {
  const int n = g.node_count();
  auto usable_arc = [&](int u, const WidthGraph::Arc& a) {
    return !c.banned_node[a.to] && !c.banned_arc.contains({u, a.to});
  };
  auto may_pass = [&](int v) { return v == src || (g.transit(v) && !c.banned_node[v]); };

  // Maximum bottleneck width reachable at dst.
  std::vector<double> best(n, -std::numeric_limits<double>::infinity());
  std::vector<bool> done(n, false);
  using Item = std::pair<double, int>;
  std::priority_queue<Item> pq;
  best[src] = std::numeric_limits<double>::infinity();
  pq.push({best[src], src});
  while (!pq.empty()) {
    auto [w, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = true;
    if (u == dst || !may_pass(u)) continue;
    for (const auto& a : g.out(u)) {
      if (!usable_arc(u, a) || a.to == src) continue;
      const double nw = std::min(w, a.width);
      if (nw > best[a.to]) {
        best[a.to] = nw;
        pq.push({nw, a.to});
      }
    }
  }
  if (!done[dst] || src == dst) return std::nullopt;
  const double target = std::min(cap, best[dst]);

  // Fewest hops over arcs at least `target` wide, measured backwards from dst.
  std::vector<int> dist(n, -1);
  std::vector<std::vector<int>> rev(n);
  for (int u = 0; u < n; ++u) {
    for (const auto& a : g.out(u)) {
      if (a.width >= target && usable_arc(u, a) && a.to != src) rev[a.to].push_back(u);
    }
  }
  std::deque<int> q{dst};
  dist[dst] = 0;
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    if (v != dst && !may_pass(v)) continue;
    for (int u : rev[v]) {
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        q.push_back(u);
      }
    }
  }
  if (dist[src] < 0) return std::nullopt;

  // Lexicographically smallest among the shortest: greedy smallest next hop.
  WidePath p;
  p.nodes.push_back(src);
  p.width = std::numeric_limits<double>::infinity();
  int u = src;
  while (u != dst) {
    int next = -1;
    double w = 0.0;
    for (const auto& a : g.out(u)) {  // arcs sorted by target id
      if (a.width < target || !usable_arc(u, a) || a.to == src) continue;
      if (dist[a.to] != dist[u] - 1) continue;
      if (a.to != dst && !may_pass(a.to)) continue;
      next = a.to;
      w = a.width;
      break;
    }
    if (next < 0) return std::nullopt;
    p.width = std::min(p.width, w);
    p.nodes.push_back(next);
    u = next;
  }
  return p;
}

}  // namespace detail

// Up to k simple src->dst paths, best first. Empty when dst is unreachable.
inline std::vector<WidePath> k_widest_paths(const WidthGraph& g, int src, int dst, int k) {
  if (k < 1) throw ContractError("k must be >= 1");
  if (src == dst) throw ContractError("source and destination must differ");
  const int n = g.node_count();
  if (src < 0 || dst < 0 || src >= n || dst >= n) throw ContractError("node id out of range");

  detail::SpurConstraints none{std::vector<bool>(n, false), {}};
  std::vector<WidePath> accepted;
  auto first = detail::best_capped_path(g, src, dst, std::numeric_limits<double>::infinity(), none);
  if (!first) return accepted;
  accepted.push_back(std::move(*first));

  auto order = [](const WidePath& a, const WidePath& b) { return path_precedes(a, b); };
  std::set<WidePath, decltype(order)> candidates(order);

  while (static_cast<int>(accepted.size()) < k) {
    const WidePath& prev = accepted.back();
    double root_width = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < prev.nodes.size(); ++i) {
      const int spur = prev.nodes[i];
      if (i > 0) root_width = std::min(root_width, *g.width(prev.nodes[i - 1], spur));

      detail::SpurConstraints c{std::vector<bool>(n, false), {}};
      for (std::size_t r = 0; r < i; ++r) c.banned_node[prev.nodes[r]] = true;
      for (const WidePath& p : accepted) {
        if (p.nodes.size() > i + 1 && std::equal(p.nodes.begin(), p.nodes.begin() + i + 1, prev.nodes.begin())) {
          c.banned_arc.insert({p.nodes[i], p.nodes[i + 1]});
        }
      }
      auto spur_path = detail::best_capped_path(g, spur, dst, root_width, c);
      if (!spur_path) continue;

      WidePath full;
      full.nodes.assign(prev.nodes.begin(), prev.nodes.begin() + i);
      full.nodes.insert(full.nodes.end(), spur_path->nodes.begin(), spur_path->nodes.end());
      full.width = std::min(root_width, spur_path->width);
      if (std::find(accepted.begin(), accepted.end(), full) == accepted.end()) {
        candidates.insert(std::move(full));
      }
    }
    if (candidates.empty()) break;
    accepted.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }
  return accepted;
}

}  // namespace lightfdg
