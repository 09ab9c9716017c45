#pragma once

// Full design evaluation: one (placement, mapping-genome) pair in, all model
// outputs and feasibility flags out. Thermal solves are far more expensive than
// the analytical models, so they run only on demand (archive members, final
// reporting); t_peak stays NaN until then and the thermal flag stays true so
// that packaging feasibility alone drives pruning.

#include <cmath>
#include <limits>
#include <vector>

#include "chipletdse/catalog.hpp"
#include "chipletdse/common.hpp"
#include "chipletdse/mapper.hpp"
#include "chipletdse/package.hpp"
#include "chipletdse/perf.hpp"
#include "chipletdse/thermal.hpp"
#include "chipletdse/topology.hpp"
#include "chipletdse/workload.hpp"

namespace chipletdse {

struct Constraints {
  double t_max_c = 75.0;
  double warpage_max_um = 150.0;
};

// Everything about a scenario that stays fixed while the optimizer explores.
struct EvalContext {
  Catalog catalog;
  InterposerSpec interposer;
  WorkloadSpec workload;
  TopologyKind kind = TopologyKind::floret;
  GridDims grid;
  TopologyParams topo_params;
  LinkParams link;
  MappingPolicy policy;
  ThermalParams thermal;
  CostParams cost;
  Constraints constraints;
};

struct Evaluation {
  double latency_s = 0.0;
  double energy_j = 0.0;
  double edp = 0.0;
  double t_peak_c = std::numeric_limits<double>::quiet_NaN();
  double max_warpage_um = 0.0;
  double cost_norm = 0.0;
  double avg_hops = 0.0;
  bool feasible_area = false;
  bool feasible_warpage = false;
  bool feasible_thermal = true; // true means "not yet refuted"; NaN t_peak = not checked

  bool thermal_checked() const { return !std::isnan(t_peak_c); }
  bool feasible() const { return feasible_area && feasible_warpage && feasible_thermal; }
};

struct DesignPoint {
  int id = -1;
  Composition composition;
  Placement placement;
  MappingGenome genome;
  Mapping mapping;
  Evaluation eval;
};

// Evaluates the analytical models. Throws ValidationError when the genome
// cannot place the workload (insufficient storage along the walk); the
// optimizer treats that as a dead candidate. When assert_prefeasible is set,
// an area- or warpage-infeasible input is a caller bug (pruning must happen
// before evaluation) and raises SolverError.
inline DesignPoint evaluate_design(const EvalContext& ctx, const Placement& placement,
                                   const MappingGenome& genome, bool with_thermal = false,
                                   bool assert_prefeasible = false) {
  DesignPoint dp;
  dp.placement = placement;
  dp.genome = genome;
  dp.composition = placement.composition(static_cast<int>(ctx.catalog.size()));

  AreaCheck area = check_area(dp.composition, ctx.catalog, ctx.interposer);
  dp.eval.feasible_area = area.feasible;

  WarpageParams wp = WarpageParams::from(ctx.interposer, ctx.catalog.chiplet_cte_per_k);
  double fill = embed_fill_fraction(dp.composition, ctx.catalog, ctx.interposer);
  WarpageResult warp = check_warpage(wp, fill, ctx.constraints.warpage_max_um);
  dp.eval.max_warpage_um = warp.max_warpage_um;
  dp.eval.feasible_warpage = warp.feasible;

  if (assert_prefeasible && (!area.feasible || !warp.feasible))
    throw SolverError("pruning soundness violated: packaging-infeasible design reached evaluation");

  dp.mapping = map_layers(ctx.workload, placement, ctx.catalog, ctx.policy, genome);
  NoiGraph graph = build_topology(placement, ctx.topo_params);
  auto traffic = build_traffic(ctx.workload, dp.mapping, placement.chiplets.size());
  PerfResult perf = compute_perf(ctx.workload, dp.mapping, placement, graph, ctx.catalog,
                                 traffic, ctx.link);
  dp.eval.latency_s = perf.latency_s;
  dp.eval.energy_j = perf.energy_j;
  dp.eval.edp = perf.edp_js;
  bool any_flow = false;
  for (const auto& row : traffic) {
    for (double v : row)
      if (v > 0.0) {
        any_flow = true;
        break;
      }
    if (any_flow) break;
  }
  dp.eval.avg_hops = any_flow ? average_hop_count(graph, traffic) : 0.0;

  dp.eval.cost_norm = fabrication_cost(dp.composition, ctx.catalog, ctx.interposer, ctx.cost).total;

  if (with_thermal) {
    ThermalResult tr = peak_temperature(placement, graph, ctx.catalog, ctx.interposer, ctx.thermal);
    dp.eval.t_peak_c = tr.t_peak_c;
    dp.eval.feasible_thermal = tr.t_peak_c <= ctx.constraints.t_max_c;
  }
  return dp;
}

// Thermal-only refresh for a design whose analytical numbers already exist.
inline void attach_thermal(const EvalContext& ctx, DesignPoint& dp) {
  NoiGraph graph = build_topology(dp.placement, ctx.topo_params);
  ThermalResult tr = peak_temperature(dp.placement, graph, ctx.catalog, ctx.interposer, ctx.thermal);
  dp.eval.t_peak_c = tr.t_peak_c;
  dp.eval.feasible_thermal = tr.t_peak_c <= ctx.constraints.t_max_c;
}

}  // namespace chipletdse
