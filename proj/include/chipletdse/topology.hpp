#pragma once

// Surface placement grid and network-on-interposer construction for the four
// supported NoI families, plus hop-count queries over the resulting graph.
//
// The grid is a router-slot abstraction: one surface chiplet (and at most one
// embedded chiplet beneath it) per cell at a fixed router pitch. Area accounting
// is handled separately by the package model.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "chipletdse/catalog.hpp"
#include "chipletdse/common.hpp"

namespace chipletdse {

enum class TopologyKind { mesh, kite, hexamesh, floret };

inline const char* to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::mesh: return "mesh";
    case TopologyKind::kite: return "kite";
    case TopologyKind::hexamesh: return "hexamesh";
    case TopologyKind::floret: return "floret";
  }
  return "?";
}

inline TopologyKind topology_from_string(const std::string& s) {
  if (s == "mesh") return TopologyKind::mesh;
  if (s == "kite") return TopologyKind::kite;
  if (s == "hexamesh") return TopologyKind::hexamesh;
  if (s == "floret") return TopologyKind::floret;
  throw ConfigError("unknown topology '" + s + "' (mesh|kite|hexamesh|floret)");
}

struct GridDims {
  int rows = 0;
  int cols = 0;
  double pitch_mm = 2.0;

  int cell_count() const { return rows * cols; }
  int cell_of(int r, int c) const { return r * cols + c; }
  int row_of(int cell) const { return cell / cols; }
  int col_of(int cell) const { return cell % cols; }
  double x_mm(int cell) const { return (col_of(cell) + 0.5) * pitch_mm; }
  double y_mm(int cell) const { return (row_of(cell) + 0.5) * pitch_mm; }
};

struct TopologyParams {
  int kite_stride = 2;      // fold interleave factor; bounds physical link length
  int floret_hub_stride = 8; // hub shortcut spacing along the space-filling chain
};

// Boustrophedon order over all cells: even rows left-to-right, odd rows reversed.
inline std::vector<int> serpentine_order(const GridDims& g) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(g.cell_count()));
  for (int r = 0; r < g.rows; ++r) {
    if (r % 2 == 0)
      for (int c = 0; c < g.cols; ++c) order.push_back(g.cell_of(r, c));
    else
      for (int c = g.cols - 1; c >= 0; --c) order.push_back(g.cell_of(r, c));
  }
  return order;
}

// Cell visit order the mapper walks: the space-filling chain for Floret,
// row-major for the grid-shaped families.
inline std::vector<int> canonical_cell_order(TopologyKind kind, const GridDims& g) {
  if (kind == TopologyKind::floret) return serpentine_order(g);
  std::vector<int> order(static_cast<std::size_t>(g.cell_count()));
  std::iota(order.begin(), order.end(), 0);
  return order;
}

struct PlacedChiplet {
  int type = -1;
  int cell = -1;
  bool embedded = false;
};

struct Placement {
  TopologyKind kind = TopologyKind::mesh;
  GridDims grid;
  std::vector<PlacedChiplet> chiplets; // instance id = index; ids stable under perturbation

  // Derived lookups; call rebuild() after editing chiplets.
  std::vector<int> surface_at;  // cell -> instance id or -1
  std::vector<int> embedded_at; // cell -> instance id or -1
  std::vector<int> walk;        // instance ids in canonical order, embedded after its host

  void rebuild() {
    int n = grid.cell_count();
    surface_at.assign(static_cast<std::size_t>(n), -1);
    embedded_at.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < chiplets.size(); ++i) {
      const auto& pc = chiplets[i];
      if (pc.cell < 0 || pc.cell >= n)
        throw ValidationError("chiplet instance " + std::to_string(i) + " placed outside the grid");
      auto& slot = pc.embedded ? embedded_at[static_cast<std::size_t>(pc.cell)]
                               : surface_at[static_cast<std::size_t>(pc.cell)];
      if (slot != -1)
        throw ValidationError("cell " + std::to_string(pc.cell) + " holds two " +
                              (pc.embedded ? std::string("embedded") : std::string("surface")) +
                              " chiplets");
      slot = static_cast<int>(i);
    }
    for (int cell = 0; cell < n; ++cell)
      if (embedded_at[static_cast<std::size_t>(cell)] != -1 &&
          surface_at[static_cast<std::size_t>(cell)] == -1)
        throw ValidationError("cell " + std::to_string(cell) +
                              " has an embedded chiplet with no surface chiplet above it");
    walk.clear();
    for (int cell : canonical_cell_order(kind, grid)) {
      int s = surface_at[static_cast<std::size_t>(cell)];
      if (s == -1) continue;
      walk.push_back(s);
      int e = embedded_at[static_cast<std::size_t>(cell)];
      if (e != -1) walk.push_back(e);
    }
  }

  Composition composition(std::size_t n_types) const {
    Composition c;
    c.surface.assign(n_types, 0);
    c.embedded.assign(n_types, 0);
    for (const auto& pc : chiplets) {
      auto t = static_cast<std::size_t>(pc.type);
      if (t >= n_types) throw ValidationError("placement references unknown chiplet type");
      (pc.embedded ? c.embedded : c.surface)[t]++;
    }
    return c;
  }

  int surface_count() const {
    int n = 0;
    for (const auto& pc : chiplets)
      if (!pc.embedded) ++n;
    return n;
  }
};

// Deterministic baseline placement: surface chiplets fill the canonical cell
// order grouped by catalog type; embedded chiplets go beneath occupied cells
// farthest from the interposer center, where they counter warpage the most.
inline Placement canonical_placement(const Composition& comp, const Catalog& cat,
                                     TopologyKind kind, const GridDims& grid) {
  validate(comp, cat);
  Placement p;
  p.kind = kind;
  p.grid = grid;

  std::vector<int> cells = canonical_cell_order(kind, grid);
  std::size_t next = 0;
  for (std::size_t t = 0; t < comp.surface.size(); ++t)
    for (int k = 0; k < comp.surface[t]; ++k) {
      if (next >= cells.size())
        throw ValidationError("composition has more surface chiplets than grid cells");
      p.chiplets.push_back({static_cast<int>(t), cells[next++], false});
    }

  int n_emb = 0;
  for (int e : comp.embedded) n_emb += e;
  if (n_emb > 0) {
    std::vector<int> occupied(cells.begin(), cells.begin() + static_cast<long>(next));
    double cx = grid.cols * grid.pitch_mm / 2.0, cy = grid.rows * grid.pitch_mm / 2.0;
    std::stable_sort(occupied.begin(), occupied.end(), [&](int a, int b) {
      double da = std::hypot(grid.x_mm(a) - cx, grid.y_mm(a) - cy);
      double db = std::hypot(grid.x_mm(b) - cx, grid.y_mm(b) - cy);
      if (da != db) return da > db;
      return a < b;
    });
    if (static_cast<std::size_t>(n_emb) > occupied.size())
      throw ValidationError("more embedded chiplets than occupied surface cells");
    std::size_t slot = 0;
    for (std::size_t t = 0; t < comp.embedded.size(); ++t)
      for (int k = 0; k < comp.embedded[t]; ++k)
        p.chiplets.push_back({static_cast<int>(t), occupied[slot++], true});
  }
  p.rebuild();
  return p;
}

struct NoiEdge {
  int a = 0;
  int b = 0; // instance ids, a < b
  bool vertical = false;
  double length_mm = 0.0;
};

struct NoiGraph {
  std::vector<NoiEdge> edges;
  std::vector<std::vector<int>> adj;      // instance id -> neighbor instance ids
  std::vector<int> lateral_ports;          // per instance (0 for embedded chiplets)
  std::vector<std::vector<int>> hops;      // all-pairs BFS distance, -1 if unreachable
  double avg_lateral_ports = 0.0;          // over surface routers
  int node_count = 0;
};

namespace detail {

// Base lateral adjacency between grid cells for one NoI family, as undirected
// cell pairs. Floret is handled separately (chain depends on the occupied set).
inline std::set<std::pair<int, int>> cell_links(TopologyKind kind, const GridDims& g) {
  std::set<std::pair<int, int>> links;
  auto add = [&](int a, int b) {
    if (a == b) return;
    links.emplace(std::min(a, b), std::max(a, b));
  };
  switch (kind) {
    case TopologyKind::mesh:
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
          if (c + 1 < g.cols) add(g.cell_of(r, c), g.cell_of(r, c + 1));
          if (r + 1 < g.rows) add(g.cell_of(r, c), g.cell_of(r + 1, c));
        }
      break;
    case TopologyKind::kite:
      // Torus rings per row and per column; the wraparound is wired as the
      // skip-link pattern of a folded layout, so it is an ordinary graph edge
      // with bounded physical length.
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
          add(g.cell_of(r, c), g.cell_of(r, (c + 1) % g.cols));
          add(g.cell_of(r, c), g.cell_of((r + 1) % g.rows, c));
        }
      break;
    case TopologyKind::hexamesh: {
      // 3D mesh projected onto the plane: factor the cell count into the most
      // cubic a x b x c (a >= b >= c), x fastest along row-major cell index.
      // Interior nodes see six neighbors.
      int n = g.cell_count();
      int ba = n, bb = 1, bc = 1;
      long best = 1 + n;
      for (int c = 1; c * c * c <= n; ++c) {
        if (n % c) continue;
        int m = n / c;
        for (int b = c; b * b <= m; ++b) {
          if (m % b) continue;
          int a = m / b;
          if (a + b + c < best) {
            best = a + b + c;
            ba = a; bb = b; bc = c;
          }
        }
      }
      auto coord = [&](int i) {
        return std::array<int, 3>{i % ba, (i / ba) % bb, i / (ba * bb)};
      };
      for (int i = 0; i < n; ++i) {
        auto p = coord(i);
        if (p[0] + 1 < ba) add(i, i + 1);
        if (p[1] + 1 < bb) add(i, i + ba);
        if (p[2] + 1 < bc) add(i, i + ba * bb);
      }
      break;
    }
    case TopologyKind::floret:
      break; // built from the occupied list
  }
  return links;
}

}  // namespace detail

inline std::vector<std::vector<int>> all_pairs_hops(const std::vector<std::vector<int>>& adj) {
  int n = static_cast<int>(adj.size());
  std::vector<std::vector<int>> hops(static_cast<std::size_t>(n),
                                     std::vector<int>(static_cast<std::size_t>(n), -1));
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    auto& d = hops[static_cast<std::size_t>(s)];
    d[static_cast<std::size_t>(s)] = 0;
    queue.clear();
    queue.push_back(s);
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : adj[static_cast<std::size_t>(u)])
        if (d[static_cast<std::size_t>(v)] == -1) {
          d[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
    }
  }
  return hops;
}

// Builds the NoI over the placed chiplets: one router per surface chiplet,
// lateral links restricted to occupied cells, one vertical link per embedded
// chiplet up to the router above it. Traffic between cells with no chiplet does
// not exist, so empty cells carry no router.
inline NoiGraph build_topology(const Placement& p, const TopologyParams& params = {}) {
  const GridDims& g = p.grid;
  NoiGraph graph;
  graph.node_count = static_cast<int>(p.chiplets.size());
  graph.adj.assign(p.chiplets.size(), {});
  graph.lateral_ports.assign(p.chiplets.size(), 0);

  auto add_edge = [&](int ia, int ib, bool vertical, double len) {
    if (ia == ib) return;
    int a = std::min(ia, ib), b = std::max(ia, ib);
    for (const auto& e : graph.adj[static_cast<std::size_t>(a)])
      if (e == b) return;
    graph.edges.push_back({a, b, vertical, len});
    graph.adj[static_cast<std::size_t>(a)].push_back(b);
    graph.adj[static_cast<std::size_t>(b)].push_back(a);
    if (!vertical) {
      graph.lateral_ports[static_cast<std::size_t>(a)]++;
      graph.lateral_ports[static_cast<std::size_t>(b)]++;
    }
  };
  auto manhattan_mm = [&](int ca, int cb) {
    return (std::abs(g.row_of(ca) - g.row_of(cb)) + std::abs(g.col_of(ca) - g.col_of(cb))) *
           g.pitch_mm;
  };

  if (p.kind == TopologyKind::floret) {
    // Chain through occupied cells in space-filling order, then hierarchical hub
    // shortcuts every H, H^2, ... positions along that chain.
    std::vector<int> occ; // instance ids in SFC order
    for (int cell : serpentine_order(g)) {
      int s = p.surface_at[static_cast<std::size_t>(cell)];
      if (s != -1) occ.push_back(s);
    }
    for (std::size_t i = 0; i + 1 < occ.size(); ++i)
      add_edge(occ[i], occ[i + 1], false,
               manhattan_mm(p.chiplets[static_cast<std::size_t>(occ[i])].cell,
                            p.chiplets[static_cast<std::size_t>(occ[i + 1])].cell));
    long stride = params.floret_hub_stride;
    while (stride > 1 && static_cast<std::size_t>(stride) < occ.size()) {
      for (std::size_t i = 0; i + static_cast<std::size_t>(stride) < occ.size();
           i += static_cast<std::size_t>(stride))
        add_edge(occ[i], occ[i + static_cast<std::size_t>(stride)], false,
                 manhattan_mm(p.chiplets[static_cast<std::size_t>(occ[i])].cell,
                              p.chiplets[static_cast<std::size_t>(occ[i + static_cast<std::size_t>(stride)])].cell));
      stride *= params.floret_hub_stride;
    }
  } else {
    for (const auto& [ca, cb] : detail::cell_links(p.kind, g)) {
      int sa = p.surface_at[static_cast<std::size_t>(ca)];
      int sb = p.surface_at[static_cast<std::size_t>(cb)];
      if (sa == -1 || sb == -1) continue;
      double len = manhattan_mm(ca, cb);
      if (p.kind == TopologyKind::kite)
        len = std::min(len, params.kite_stride * g.pitch_mm); // folded wiring
      add_edge(sa, sb, false, len);
    }
  }

  for (std::size_t i = 0; i < p.chiplets.size(); ++i) {
    if (!p.chiplets[i].embedded) continue;
    int host = p.surface_at[static_cast<std::size_t>(p.chiplets[i].cell)];
    add_edge(static_cast<int>(i), host, true, 0.1); // through-interposer via
  }

  int surface_nodes = 0;
  long port_sum = 0;
  for (std::size_t i = 0; i < p.chiplets.size(); ++i)
    if (!p.chiplets[i].embedded) {
      ++surface_nodes;
      port_sum += graph.lateral_ports[i];
    }
  graph.avg_lateral_ports = surface_nodes > 0 ? double(port_sum) / surface_nodes : 0.0;
  graph.hops = all_pairs_hops(graph.adj);
  return graph;
}

inline bool connected(const NoiGraph& g) {
  if (g.node_count <= 1) return true;
  const auto& d = g.hops[0];
  return std::none_of(d.begin(), d.end(), [](int h) { return h < 0; });
}

inline int shortest_hops(const NoiGraph& g, int a, int b) {
  int h = g.hops.at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(b));
  if (h < 0)
    throw ValidationError("no path between chiplets " + std::to_string(a) + " and " +
                          std::to_string(b));
  return h;
}

// Traffic-weighted mean hop count over ordered pairs carrying traffic.
inline double average_hop_count(const NoiGraph& g, const std::vector<std::vector<double>>& traffic) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < traffic.size(); ++i)
    for (std::size_t j = 0; j < traffic[i].size(); ++j) {
      double f = traffic[i][j];
      if (f <= 0.0 || i == j) continue;
      num += f * shortest_hops(g, static_cast<int>(i), static_cast<int>(j));
      den += f;
    }
  if (den <= 0.0) throw ValidationError("traffic matrix has no nonzero flows");
  return num / den;
}

struct PortStats {
  double avg_lateral_ports = 0.0;
  int link_count = 0;
  int node_count = 0;
  int min_ports = 0;
  int max_ports = 0;
};

// Table-style port statistics on a fully occupied grid of single-type chiplets.
inline PortStats port_stats(TopologyKind kind, const GridDims& grid,
                            const TopologyParams& params = {}) {
  Composition full = Composition::surface_only({grid.cell_count()});
  Catalog dummy;
  dummy.chiplets.push_back({"probe", MemTech::SRAM, 1, 1, 1, 1, 100.0, 1.0, 1.0, 1.0, 1e-12, true, {}});
  Placement p = canonical_placement(full, dummy, kind, grid);
  NoiGraph g = build_topology(p, params);
  PortStats s;
  s.avg_lateral_ports = g.avg_lateral_ports;
  s.node_count = g.node_count;
  for (const auto& e : g.edges)
    if (!e.vertical) s.link_count++;
  s.min_ports = s.max_ports = g.lateral_ports.empty() ? 0 : g.lateral_ports[0];
  for (int pc : g.lateral_ports) {
    s.min_ports = std::min(s.min_ports, pc);
    s.max_ports = std::max(s.max_ports, pc);
  }
  return s;
}

}  // namespace chipletdse
