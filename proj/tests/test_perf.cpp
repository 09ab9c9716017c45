#include <catch_amalgamated.hpp>

#include "chipletdse/mapper.hpp"
#include "chipletdse/perf.hpp"

using namespace chipletdse;

namespace {

Catalog tiny_catalog() { return load_catalog(TEST_DATA_DIR "/catalog_tiny.json"); }

// Two layers in a chain: 60 KB / 3e6 MACs / 6400 bits out, then 50 KB / 1e6.
WorkloadSpec chain_workload() {
  WorkloadSpec wl;
  wl.name = "chain";
  LayerSpec a;
  a.id = "c.a";
  a.dnn = "c";
  a.weight_kb = 60.0;
  a.macs = 3e6;
  a.act_out_bits = 6400.0;
  a.sparsity = 0.5;
  a.successors = {"c.b"};
  LayerSpec b;
  b.id = "c.b";
  b.dnn = "c";
  b.weight_kb = 50.0;
  b.macs = 1e6;
  b.act_out_bits = 1000.0;
  wl.layers = {a, b};
  wl.dnns = {{"c", {"c.a", "c.b"}}};
  wl.rebuild_index();
  return wl;
}

struct Rig {
  Placement placement;
  Mapping mapping;
  NoiGraph graph;
  std::vector<std::vector<double>> traffic;
};

Rig lateral_rig(const Catalog& cat, const WorkloadSpec& wl) {
  Rig r;
  r.placement.kind = TopologyKind::mesh;
  r.placement.grid = {1, 2, 2.0};
  r.placement.chiplets = {{0, 0, false}, {1, 1, false}};
  r.placement.rebuild();
  r.mapping = map_layers(wl, r.placement, cat);
  r.graph = build_topology(r.placement);
  r.traffic = build_traffic(wl, r.mapping, r.placement.chiplets.size());
  return r;
}

}  // namespace

TEST_CASE("latency and energy closed form on a two-chiplet chain") {
  Catalog cat = tiny_catalog();
  WorkloadSpec wl = chain_workload();
  Rig rig = lateral_rig(cat, wl);

  // Layer a fills 60 of the 100 KB ReRAM tile; b splits 40/10 = 0.8/0.2.
  REQUIRE(rig.traffic[0][1] == Catch::Approx(6400.0 * 0.2));

  LinkParams lp; // silicon defaults: 1/1.15 ns cycle, 32-bit links, 1 router cycle
  PerfResult r = compute_perf(wl, rig.mapping, rig.placement, rig.graph, cat, rig.traffic, lp);

  double lat_a = 3e6 / 30e12;
  double lat_b = 0.8 * 1e6 / 30e12 + 0.2 * 1e6 / 10e12;
  REQUIRE(r.compute_latency_s == Catch::Approx(lat_a + lat_b).epsilon(1e-12));

  double en_a = 0.5 * 3e6 * 0.5e-12;
  double en_b = 1.0 * (0.8e6 * 0.5e-12 + 0.2e6 * 0.2e-12);
  REQUIRE(r.compute_energy_j == Catch::Approx(en_a + en_b).epsilon(1e-12));

  // 1280 bits over one lateral hop: 40 flit units, (1 hop + 1 router) cycles each.
  double units = 1280.0 / 32.0;
  REQUIRE(r.comm_latency_s == Catch::Approx(units * 2.0 / 1.15e9).epsilon(1e-12));
  REQUIRE(r.comm_energy_j == Catch::Approx(1280.0 * (1.0e-12 + 0.4e-12)).epsilon(1e-12));
  REQUIRE(r.total_hop_bits == Catch::Approx(1280.0));

  REQUIRE(r.latency_s == Catch::Approx(std::max(r.compute_latency_s, r.comm_latency_s)));
  REQUIRE(r.energy_j == Catch::Approx(r.compute_energy_j + r.comm_energy_j));
  REQUIRE(r.edp_js == Catch::Approx(r.latency_s * r.energy_j));
}

TEST_CASE("router delay can be charged only at intermediate hops") {
  Catalog cat = tiny_catalog();
  WorkloadSpec wl = chain_workload();
  Rig rig = lateral_rig(cat, wl);

  LinkParams lp;
  lp.router_delay_intermediate_only = true;
  PerfResult r = compute_perf(wl, rig.mapping, rig.placement, rig.graph, cat, rig.traffic, lp);
  // One hop has no intermediate router, so only the link cycle remains.
  REQUIRE(r.comm_latency_s == Catch::Approx(40.0 * 1.0 / 1.15e9).epsilon(1e-12));
}

TEST_CASE("embedded endpoints pay the vertical link energy") {
  Catalog cat = tiny_catalog();
  WorkloadSpec wl = chain_workload();
  Rig rig;
  rig.placement.kind = TopologyKind::mesh;
  rig.placement.grid = {1, 2, 2.0};
  rig.placement.chiplets = {{0, 0, false}, {1, 0, true}};
  rig.placement.rebuild();
  rig.mapping = map_layers(wl, rig.placement, cat);
  rig.graph = build_topology(rig.placement);
  rig.traffic = build_traffic(wl, rig.mapping, rig.placement.chiplets.size());

  REQUIRE(rig.traffic[0][1] == Catch::Approx(1280.0));
  LinkParams lp;
  PerfResult r = compute_perf(wl, rig.mapping, rig.placement, rig.graph, cat, rig.traffic, lp);
  // The single hop is the via: vertical link energy, no lateral share.
  REQUIRE(r.comm_energy_j == Catch::Approx(1280.0 * (0.6e-12 + 0.4e-12)).epsilon(1e-12));
  REQUIRE(r.comm_latency_s == Catch::Approx(40.0 * 2.0 / 1.15e9).epsilon(1e-12));
}

TEST_CASE("glass link defaults run faster and cheaper per bit") {
  LinkParams si = LinkParams::defaults(Interposer::silicon);
  LinkParams gl = LinkParams::defaults(Interposer::glass);
  REQUIRE(si.cycle_s == Catch::Approx(1.0 / 1.15e9));
  REQUIRE(gl.cycle_s == Catch::Approx(0.5e-9));
  REQUIRE(gl.e_link_lateral_j_bit < si.e_link_lateral_j_bit);

  Catalog cat = tiny_catalog();
  WorkloadSpec wl = chain_workload();
  Rig rig = lateral_rig(cat, wl);
  PerfResult rs = compute_perf(wl, rig.mapping, rig.placement, rig.graph, cat, rig.traffic, si);
  PerfResult rg = compute_perf(wl, rig.mapping, rig.placement, rig.graph, cat, rig.traffic, gl);
  REQUIRE(rg.comm_latency_s < rs.comm_latency_s);
  REQUIRE(rg.comm_energy_j < rs.comm_energy_j);
  REQUIRE(rg.compute_latency_s == Catch::Approx(rs.compute_latency_s)); // link-independent
}

TEST_CASE("sparsity scales compute energy but not latency") {
  Catalog cat = tiny_catalog();
  WorkloadSpec dense = chain_workload();
  WorkloadSpec sparse = chain_workload();
  dense.layers[0].sparsity = 1.0;
  sparse.layers[0].sparsity = 0.25;

  Rig rd = lateral_rig(cat, dense);
  Rig rs = lateral_rig(cat, sparse);
  PerfResult pd = compute_perf(dense, rd.mapping, rd.placement, rd.graph, cat, rd.traffic);
  PerfResult ps = compute_perf(sparse, rs.mapping, rs.placement, rs.graph, cat, rs.traffic);
  REQUIRE(ps.compute_latency_s == Catch::Approx(pd.compute_latency_s));
  double dense_a = 1.0 * 3e6 * 0.5e-12;
  double sparse_a = 0.25 * 3e6 * 0.5e-12;
  REQUIRE(pd.compute_energy_j - ps.compute_energy_j == Catch::Approx(dense_a - sparse_a));
}

TEST_CASE("multi-hop flows multiply the hop count in") {
  Catalog cat = tiny_catalog();
  WorkloadSpec wl = chain_workload();
  wl.layers[1].dynamic = true; // b skips the ReRAM tiles

  // ReRAM, ReRAM, SRAM in a row: a sits on tile 0, b is pushed to tile 2, and
  // the whole activation volume crosses two hops.
  Placement p;
  p.kind = TopologyKind::mesh;
  p.grid = {1, 3, 2.0};
  p.chiplets = {{0, 0, false}, {0, 1, false}, {1, 2, false}};
  p.rebuild();
  Mapping m = map_layers(wl, p, cat);
  REQUIRE(m.per_layer[0][0].instance == 0);
  REQUIRE(m.per_layer[1].size() == 1);
  REQUIRE(m.per_layer[1][0].instance == 2);

  auto traffic = build_traffic(wl, m, p.chiplets.size());
  NoiGraph graph = build_topology(p);
  PerfResult r = compute_perf(wl, m, p, graph, cat, traffic, {});
  REQUIRE(r.total_hop_bits == Catch::Approx(6400.0 * 2.0));
  REQUIRE(r.comm_latency_s == Catch::Approx(200.0 * 3.0 / 1.15e9).epsilon(1e-12));
  REQUIRE(r.comm_energy_j == Catch::Approx(6400.0 * 2.0 * 1.4e-12).epsilon(1e-12));
}
