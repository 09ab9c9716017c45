#pragma once

// Analytical latency / energy / EDP model for a mapped workload on a NoI.
//
// Compute and communication are assumed to overlap across the pipeline, so the
// end-to-end latency is the larger of the two totals. Communication cost is
// charged per flow from the all-pairs hop counts; paths through an embedded
// chiplet always enter and leave through its single vertical link, so the
// lateral/vertical split is exact without storing routes.

#include <algorithm>
#include <vector>

#include "chipletdse/catalog.hpp"
#include "chipletdse/common.hpp"
#include "chipletdse/mapper.hpp"
#include "chipletdse/topology.hpp"
#include "chipletdse/workload.hpp"

namespace chipletdse {

struct LinkParams {
  double cycle_s = 1.0 / 1.15e9;        // per-hop link traversal time
  double width_bits = 32.0;             // parallel wires per link
  double router_delay_cycles = 1.0;
  double e_link_lateral_j_bit = 1.0e-12;
  double e_link_vertical_j_bit = 0.6e-12;
  double e_router_j_bit = 0.4e-12;
  // Charge router pipeline delay only at intermediate hops instead of once per
  // traversal. Off by default.
  bool router_delay_intermediate_only = false;

  static LinkParams defaults(Interposer ip) {
    LinkParams p;
    if (ip == Interposer::glass) {
      p.cycle_s = 0.5e-9;
      p.e_link_lateral_j_bit = 0.6e-12;
      p.e_link_vertical_j_bit = 0.5e-12;
    }
    return p;
  }
};

struct PerfResult {
  double compute_latency_s = 0.0;
  double comm_latency_s = 0.0;
  double latency_s = 0.0;
  double compute_energy_j = 0.0;
  double comm_energy_j = 0.0;
  double energy_j = 0.0;
  double edp_js = 0.0;
  double total_hop_bits = 0.0;  // sum over flows of bits * hops
};

inline PerfResult compute_perf(const WorkloadSpec& wl, const Mapping& m,
                               const Placement& placement, const NoiGraph& graph,
                               const Catalog& cat,
                               const std::vector<std::vector<double>>& traffic,
                               const LinkParams& lp = {}) {
  PerfResult r;

  for (std::size_t li = 0; li < wl.layers.size(); ++li) {
    const LayerSpec& layer = wl.layers[li];
    for (const auto& slice : m.per_layer[li]) {
      const ChipletSpec& spec =
          cat.at(static_cast<std::size_t>(placement.chiplets[static_cast<std::size_t>(slice.instance)].type));
      double macs = layer.macs * slice.fraction;
      r.compute_latency_s += macs / (spec.tops * 1e12);
      r.compute_energy_j += layer.sparsity * macs * spec.energy_per_mac_j;
    }
  }

  const std::size_t n = placement.chiplets.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double bits = traffic[i][j];
      if (bits <= 0.0) continue;
      int h = shortest_hops(graph, static_cast<int>(i), static_cast<int>(j));
      int vert = (placement.chiplets[i].embedded ? 1 : 0) + (placement.chiplets[j].embedded ? 1 : 0);
      int lat = h - vert;
      double units = bits / lp.width_bits;
      double delay_cycles =
          lp.router_delay_intermediate_only
              ? h + lp.router_delay_cycles * std::max(h - 1, 0)
              : h + lp.router_delay_cycles;
      r.comm_latency_s += units * delay_cycles * lp.cycle_s;
      r.comm_energy_j += bits * (lat * (lp.e_link_lateral_j_bit + lp.e_router_j_bit) +
                                 vert * (lp.e_link_vertical_j_bit + lp.e_router_j_bit));
      r.total_hop_bits += bits * h;
    }

  r.latency_s = std::max(r.compute_latency_s, r.comm_latency_s);
  r.energy_j = r.compute_energy_j + r.comm_energy_j;
  r.edp_js = r.latency_s * r.energy_j;
  return r;
}

}  // namespace chipletdse
