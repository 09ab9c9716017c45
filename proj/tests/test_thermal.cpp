#include <catch_amalgamated.hpp>

#include <cmath>

#include "chipletdse/thermal.hpp"

using namespace chipletdse;

namespace {

Catalog main_catalog() { return load_catalog(TEST_DATA_DIR "/catalog.json"); }
Catalog tiny_catalog() { return load_catalog(TEST_DATA_DIR "/catalog_tiny.json"); }

// Dense Gaussian elimination with partial pivoting over the same node balance
// the iterative solver sees; the oracle for solver accuracy.
std::vector<double> dense_solve(const ThermalGrid& g) {
  const int n = g.n;
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double diag = g.ground_g[static_cast<std::size_t>(i)];
    for (auto [j, w] : g.adj[static_cast<std::size_t>(i)]) {
      diag += w;
      a[static_cast<std::size_t>(i) * n + j] -= w;
    }
    a[static_cast<std::size_t>(i) * n + i] += diag;
    b[static_cast<std::size_t>(i)] = g.source_w[static_cast<std::size_t>(i)] +
                                     g.ground_g[static_cast<std::size_t>(i)] * g.ambient_c;
  }
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a[static_cast<std::size_t>(i) * n + k]) >
          std::fabs(a[static_cast<std::size_t>(piv) * n + k]))
        piv = i;
    if (piv != k) {
      for (int j = 0; j < n; ++j)
        std::swap(a[static_cast<std::size_t>(k) * n + j], a[static_cast<std::size_t>(piv) * n + j]);
      std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(piv)]);
    }
    double pivot = a[static_cast<std::size_t>(k) * n + k];
    REQUIRE(std::fabs(pivot) > 0.0);
    for (int i = k + 1; i < n; ++i) {
      double f = a[static_cast<std::size_t>(i) * n + k] / pivot;
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j)
        a[static_cast<std::size_t>(i) * n + j] -= f * a[static_cast<std::size_t>(k) * n + j];
      b[static_cast<std::size_t>(i)] -= f * b[static_cast<std::size_t>(k)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= a[static_cast<std::size_t>(i) * n + j] * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
  }
  return x;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::fabs(v));
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::fabs(a[i] - b[i]));
  return diff / scale;
}

struct Package {
  Placement placement;
  NoiGraph graph;
};

Package packaged(const Composition& comp, const Catalog& cat, TopologyKind kind, int rows,
                 int cols) {
  Package pk;
  pk.placement = canonical_placement(comp, cat, kind, GridDims{rows, cols, 2.0});
  pk.graph = build_topology(pk.placement);
  return pk;
}

}  // namespace

TEST_CASE("two-node network closed form") {
  ThermalGrid g;
  g.resize(2);
  g.add_edge(0, 1, 2.0);
  g.ground_g[0] = 0.5;
  g.source_w[1] = 3.0;
  std::vector<double> t = solve_steady_state(g);
  // All 3 W leave through node 0: T0 = 25 + 3/0.5, T1 = T0 + 3/2.
  REQUIRE(t[0] == Catch::Approx(31.0).margin(1e-9));
  REQUIRE(t[1] == Catch::Approx(32.5).margin(1e-9));
}

TEST_CASE("iterative solve matches dense elimination on package grids") {
  SECTION("large surface-only mix on silicon") {
    Composition comp = Composition::surface_only({24, 28, 0, 18, 12});
    Package pk = packaged(comp, main_catalog(), TopologyKind::floret, 12, 12);
    ThermalGrid grid =
        build_thermal_grid(pk.placement, pk.graph, main_catalog(), InterposerSpec::silicon(), {});
    REQUIRE(max_rel_diff(solve_steady_state(grid), dense_solve(grid)) < 1e-5);
  }
  SECTION("embedded mix on glass") {
    Composition comp = Composition::surface_only({24, 24, 0, 18, 9});
    comp.embedded = {0, 4, 0, 0, 3};
    Package pk = packaged(comp, main_catalog(), TopologyKind::mesh, 10, 10);
    ThermalGrid grid =
        build_thermal_grid(pk.placement, pk.graph, main_catalog(), InterposerSpec::glass(), {});
    REQUIRE(max_rel_diff(solve_steady_state(grid), dense_solve(grid)) < 1e-5);
  }
  SECTION("tiny fixture") {
    Composition comp = Composition::surface_only({2, 1});
    Package pk = packaged(comp, tiny_catalog(), TopologyKind::floret, 2, 2);
    InterposerSpec ip = InterposerSpec::silicon(4.0, 4.0);
    ThermalGrid grid = build_thermal_grid(pk.placement, pk.graph, tiny_catalog(), ip, {});
    REQUIRE(max_rel_diff(solve_steady_state(grid), dense_solve(grid)) < 1e-5);
  }
}

TEST_CASE("zero injected power settles at ambient") {
  Composition comp = Composition::surface_only({2, 1});
  Package pk = packaged(comp, tiny_catalog(), TopologyKind::floret, 2, 2);
  ThermalParams tp;
  tp.utilization = 0.0;
  tp.router_port_power_w = 0.0;
  ThermalResult r = peak_temperature(pk.placement, pk.graph, tiny_catalog(),
                                     InterposerSpec::silicon(4.0, 4.0), tp);
  REQUIRE(r.t_peak_c == Catch::Approx(25.0).margin(1e-9));
  for (double t : r.field) REQUIRE(t == Catch::Approx(25.0).margin(1e-9));
}

TEST_CASE("peak temperature is monotone in utilization") {
  Composition comp = Composition::surface_only({2, 1});
  Package pk = packaged(comp, tiny_catalog(), TopologyKind::floret, 2, 2);
  InterposerSpec ip = InterposerSpec::silicon(4.0, 4.0);
  Catalog cat = tiny_catalog();
  double prev = 25.0;
  for (double util : {0.1, 0.2, 0.4, 0.8}) {
    ThermalParams tp;
    tp.utilization = util;
    double t = peak_temperature(pk.placement, pk.graph, cat, ip, tp).t_peak_c;
    REQUIRE(t > prev);
    prev = t;
  }
}

TEST_CASE("glass runs hotter than silicon for the same design") {
  Composition comp = Composition::surface_only({24, 28, 0, 18, 12});
  Catalog cat = main_catalog();
  Package pk = packaged(comp, cat, TopologyKind::floret, 10, 10);
  ThermalParams tp;
  double si = peak_temperature(pk.placement, pk.graph, cat, InterposerSpec::silicon(), tp).t_peak_c;
  double gl = peak_temperature(pk.placement, pk.graph, cat, InterposerSpec::glass(), tp).t_peak_c;
  REQUIRE(gl > si);
}

TEST_CASE("embedding moves heat into the interposer and raises the peak") {
  Catalog cat = main_catalog();
  Composition flat = Composition::surface_only({24, 28, 0, 18, 12});
  Composition embedded = Composition::surface_only({24, 24, 0, 18, 9});
  embedded.embedded = {0, 4, 0, 0, 3};
  Package pflat = packaged(flat, cat, TopologyKind::floret, 10, 10);
  Package pemb = packaged(embedded, cat, TopologyKind::floret, 10, 10);
  ThermalParams tp;
  InterposerSpec gl = InterposerSpec::glass();
  double t_flat = peak_temperature(pflat.placement, pflat.graph, cat, gl, tp).t_peak_c;
  double t_emb = peak_temperature(pemb.placement, pemb.graph, cat, gl, tp).t_peak_c;
  REQUIRE(t_emb > t_flat);
}

TEST_CASE("solver rejects degenerate networks") {
  ThermalGrid empty;
  REQUIRE_THROWS_AS(solve_steady_state(empty), ValidationError);

  ThermalGrid floating;
  floating.resize(2);
  floating.add_edge(0, 1, 1.0);
  REQUIRE_THROWS_AS(solve_steady_state(floating), ValidationError); // no boundary

  ThermalGrid isolated;
  isolated.resize(2);
  isolated.ground_g[0] = 1.0;
  REQUIRE_THROWS_AS(solve_steady_state(isolated), ValidationError); // node 1 unattached
}

TEST_CASE("repeated solves are bit identical") {
  Composition comp = Composition::surface_only({2, 1});
  Package pk = packaged(comp, tiny_catalog(), TopologyKind::floret, 2, 2);
  InterposerSpec ip = InterposerSpec::silicon(4.0, 4.0);
  ThermalGrid grid = build_thermal_grid(pk.placement, pk.graph, tiny_catalog(), ip, {});
  std::vector<double> a = solve_steady_state(grid);
  std::vector<double> b = solve_steady_state(grid);
  REQUIRE(a == b);
}

TEST_CASE("thermal node layout") {
  REQUIRE(thermal_node(THERMAL_SPREADER, 7, 100) == 7);
  REQUIRE(thermal_node(THERMAL_CHIPLET, 7, 100) == 107);
  REQUIRE(thermal_node(THERMAL_INTERPOSER, 7, 100) == 207);
}

TEST_CASE("conductance variation anchors and monotonicity") {
  REQUIRE(conductance_variation(300.0) == Catch::Approx(0.001).epsilon(1e-12));
  REQUIRE(conductance_variation(350.0) == Catch::Approx(0.080).epsilon(1e-12));
  REQUIRE(conductance_variation(325.0) == Catch::Approx(0.001 * std::sqrt(80.0)).epsilon(1e-12));

  double prev = conductance_variation(250.0);
  for (int i = 1; i <= 150; ++i) {
    double t = 250.0 + i * 1.0;
    double s = conductance_variation(t);
    REQUIRE(s > prev);
    prev = s;
  }
  REQUIRE_THROWS_AS(conductance_variation(-1.0), ValidationError);
}

TEST_CASE("sink calibration hits a reachable target") {
  Composition comp = Composition::surface_only({2, 1});
  Catalog cat = tiny_catalog();
  Package pk = packaged(comp, cat, TopologyKind::floret, 2, 2);
  InterposerSpec ip = InterposerSpec::silicon(4.0, 4.0);
  ThermalParams tp;

  // Peak temperature grows with sink resistance, so the bracket endpoints
  // bound what any target can reach.
  ThermalParams lo = tp, hi = tp;
  lo.sink_resistance_k_per_w = 1e-4;
  hi.sink_resistance_k_per_w = 10.0;
  double t_lo = peak_temperature(pk.placement, pk.graph, cat, ip, lo).t_peak_c;
  double t_hi = peak_temperature(pk.placement, pk.graph, cat, ip, hi).t_peak_c;
  REQUIRE(t_hi > t_lo);

  double target = 0.5 * (t_lo + t_hi);
  double r = calibrate_sink_resistance(pk.placement, pk.graph, cat, ip, tp, target, 0.05);
  REQUIRE(r > 1e-4);
  REQUIRE(r < 10.0);
  tp.sink_resistance_k_per_w = r;
  double hit = peak_temperature(pk.placement, pk.graph, cat, ip, tp).t_peak_c;
  REQUIRE(hit == Catch::Approx(target).margin(0.05));

  REQUIRE_THROWS_AS(
      calibrate_sink_resistance(pk.placement, pk.graph, cat, ip, tp, t_hi + 5.0), SolverError);
  REQUIRE_THROWS_AS(
      calibrate_sink_resistance(pk.placement, pk.graph, cat, ip, tp, t_lo - 5.0), SolverError);
}
