#pragma once

// Compact steady-state thermal model and the temperature-driven ReRAM
// conductance-variation curve.
//
// Stack per grid cell, top to bottom: heat spreader (coupled to ambient through
// the sink), surface-chiplet layer, interposer (embedded chiplets inject here),
// board boundary at ambient below. The interposer's own vertical and lateral
// conductances derive from its material, which is what makes glass run hot:
// with lambda three orders down, the downward path through the substrate
// collapses and router plus embedded-chiplet heat detours up through the
// die stack.

#include <cmath>
#include <utility>
#include <vector>

#include "chipletdse/catalog.hpp"
#include "chipletdse/common.hpp"
#include "chipletdse/topology.hpp"

namespace chipletdse {

// Generic node-network heat balance: solve for temperatures T with
// sum_j g_ij (T_i - T_j) + ground_g_i (T_i - ambient) = source_i.
struct ThermalGrid {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj; // symmetric conductances, W/K
  std::vector<double> ground_g;                         // to-ambient conductance per node
  std::vector<double> source_w;                         // injected power per node
  double ambient_c = 25.0;

  void resize(int nodes) {
    n = nodes;
    adj.assign(static_cast<std::size_t>(nodes), {});
    ground_g.assign(static_cast<std::size_t>(nodes), 0.0);
    source_w.assign(static_cast<std::size_t>(nodes), 0.0);
  }

  void add_edge(int a, int b, double g) {
    if (g <= 0.0) return;
    adj[static_cast<std::size_t>(a)].push_back({b, g});
    adj[static_cast<std::size_t>(b)].push_back({a, g});
  }
};

struct SolveOptions {
  double target_rel_residual = 1e-12;
  double accept_rel_residual = 1e-6; // hard failure beyond this
  int max_iterations = 50000;
};

// Jacobi-preconditioned conjugate gradient on the (SPD) conductance system.
// Iteration order is fixed, so results are bit-identical run to run.
inline std::vector<double> solve_steady_state(const ThermalGrid& grid, SolveOptions opt = {}) {
  const int n = grid.n;
  if (n <= 0) throw ValidationError("thermal grid has no nodes");
  bool grounded = false;
  for (double g : grid.ground_g) grounded = grounded || g > 0.0;
  if (!grounded) throw ValidationError("thermal grid has no boundary connection");

  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double d = grid.ground_g[static_cast<std::size_t>(i)];
    for (auto [j, g] : grid.adj[static_cast<std::size_t>(i)]) {
      (void)j;
      d += g;
    }
    if (d <= 0.0) throw ValidationError("thermal node with no conductance attached");
    diag[static_cast<std::size_t>(i)] = d;
  }

  auto matvec = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int i = 0; i < n; ++i) {
      double acc = diag[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      for (auto [j, g] : grid.adj[static_cast<std::size_t>(i)])
        acc -= g * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = acc;
    }
  };

  std::vector<double> b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    b[static_cast<std::size_t>(i)] = grid.source_w[static_cast<std::size_t>(i)] +
                                     grid.ground_g[static_cast<std::size_t>(i)] * grid.ambient_c;

  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  std::vector<double> x(static_cast<std::size_t>(n), grid.ambient_c);
  if (bnorm == 0.0) x.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<double> r(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n)),
      p(static_cast<std::size_t>(n)), ap(static_cast<std::size_t>(n));
  matvec(x, ap);
  for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] - ap[static_cast<std::size_t>(i)];

  auto rel_res = [&]() {
    double rn = 0.0;
    for (double v : r) rn += v * v;
    return bnorm > 0.0 ? std::sqrt(rn) / bnorm : std::sqrt(rn);
  };

  double rz = 0.0;
  for (int i = 0; i < n; ++i) {
    z[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] / diag[static_cast<std::size_t>(i)];
    rz += r[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
  }
  p = z;

  int it = 0;
  while (rel_res() > opt.target_rel_residual && it < opt.max_iterations) {
    matvec(p, ap);
    double pap = 0.0;
    for (int i = 0; i < n; ++i) pap += p[static_cast<std::size_t>(i)] * ap[static_cast<std::size_t>(i)];
    if (pap <= 0.0) break; // numerically exhausted
    double alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] += alpha * p[static_cast<std::size_t>(i)];
      r[static_cast<std::size_t>(i)] -= alpha * ap[static_cast<std::size_t>(i)];
    }
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) {
      z[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] / diag[static_cast<std::size_t>(i)];
      rz_new += r[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
    }
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i)
      p[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + beta * p[static_cast<std::size_t>(i)];
    ++it;
  }

  double res = rel_res();
  if (res > opt.accept_rel_residual)
    throw SolverError("thermal solve did not converge: relative residual " + fmt_double(res) +
                      " after " + std::to_string(it) + " iterations");

  // Energy balance: what leaves through the boundaries must equal what was injected.
  double src = 0.0, out = 0.0;
  for (int i = 0; i < n; ++i) {
    src += grid.source_w[static_cast<std::size_t>(i)];
    out += grid.ground_g[static_cast<std::size_t>(i)] * (x[static_cast<std::size_t>(i)] - grid.ambient_c);
  }
  if (std::fabs(src) > 1e-12 && std::fabs(out - src) > 1e-4 * std::fabs(src))
    throw SolverError("thermal energy balance violated: injected " + fmt_double(src) +
                      " W, boundary outflow " + fmt_double(out) + " W");
  return x;
}

// Resistances and couplings are calibrated so the reference 82-die silicon
// floret build sits at 75 C peak; everything else follows from the network.
struct ThermalParams {
  double ambient_c = 25.0;
  double utilization = 0.22;              // activity scale on chiplet peak power
  double sink_resistance_k_per_w = 0.1365; // total spreader-to-ambient resistance
  double board_resistance_k_per_w = 0.25;  // total interposer-underside-to-board
  double router_port_power_w = 0.25;      // per lateral router port
  double tim_conductance_w_k = 1.5;       // per cell, chiplet to spreader
  double c2i_conductance_w_k = 0.6;       // per cell, chiplet to interposer
  // A cavity die has no TIM path; it reaches the die above through thin
  // oxide and underfill, a fraction of the surface coupling.
  double embed_coupling_factor = 0.3;
  double spreader_lateral_w_k = 0.4;    // per adjacent cell pair
  double chiplet_lateral_w_k = 0.002;   // dies are nearly isolated laterally
  double interposer_spread_boost = 1.0; // multiplier on lambda * thickness
  SolveOptions solve;
};

// Node layout of the package grid: three unknown layers over the full cell grid.
enum : int { THERMAL_SPREADER = 0, THERMAL_CHIPLET = 1, THERMAL_INTERPOSER = 2 };

inline int thermal_node(int layer, int cell, int n_cells) { return layer * n_cells + cell; }

inline ThermalGrid build_thermal_grid(const Placement& placement, const NoiGraph& graph,
                                      const Catalog& cat, const InterposerSpec& ip,
                                      const ThermalParams& tp) {
  const GridDims& gd = placement.grid;
  const int nc = gd.cell_count();
  ThermalGrid grid;
  grid.resize(3 * nc);
  grid.ambient_c = tp.ambient_c;

  const double cell_m = gd.pitch_mm * 1e-3;
  const double cell_area_m2 = cell_m * cell_m;
  const double thick_m = ip.thickness_um * 1e-6;
  // Lateral conduction between adjacent cells of a sheet: lambda * thickness
  // (the width/length factors cancel for square cells).
  const double g_ip_lateral = ip.thermal_conductivity_w_mk * thick_m * tp.interposer_spread_boost;
  // Vertical conduction through the interposer slab under one cell.
  const double g_ip_vertical = ip.thermal_conductivity_w_mk * cell_area_m2 / thick_m;
  const double g_sink_cell = 1.0 / (tp.sink_resistance_k_per_w * nc);
  const double r_board_cell = tp.board_resistance_k_per_w * nc;
  const double g_down_cell = 1.0 / (r_board_cell + 1.0 / g_ip_vertical);

  for (int c = 0; c < nc; ++c) {
    int r = gd.row_of(c), col = gd.col_of(c);
    if (col + 1 < gd.cols) {
      int e = gd.cell_of(r, col + 1);
      grid.add_edge(thermal_node(THERMAL_SPREADER, c, nc), thermal_node(THERMAL_SPREADER, e, nc), tp.spreader_lateral_w_k);
      grid.add_edge(thermal_node(THERMAL_CHIPLET, c, nc), thermal_node(THERMAL_CHIPLET, e, nc), tp.chiplet_lateral_w_k);
      grid.add_edge(thermal_node(THERMAL_INTERPOSER, c, nc), thermal_node(THERMAL_INTERPOSER, e, nc), g_ip_lateral);
    }
    if (r + 1 < gd.rows) {
      int s = gd.cell_of(r + 1, col);
      grid.add_edge(thermal_node(THERMAL_SPREADER, c, nc), thermal_node(THERMAL_SPREADER, s, nc), tp.spreader_lateral_w_k);
      grid.add_edge(thermal_node(THERMAL_CHIPLET, c, nc), thermal_node(THERMAL_CHIPLET, s, nc), tp.chiplet_lateral_w_k);
      grid.add_edge(thermal_node(THERMAL_INTERPOSER, c, nc), thermal_node(THERMAL_INTERPOSER, s, nc), g_ip_lateral);
    }
    grid.ground_g[static_cast<std::size_t>(thermal_node(THERMAL_SPREADER, c, nc))] = g_sink_cell;
    grid.ground_g[static_cast<std::size_t>(thermal_node(THERMAL_INTERPOSER, c, nc))] = g_down_cell;
    grid.add_edge(thermal_node(THERMAL_SPREADER, c, nc), thermal_node(THERMAL_CHIPLET, c, nc), tp.tim_conductance_w_k);
  }

  // Chiplet-to-interposer coupling, weakened where a die sits in a cavity.
  std::vector<double> c2i(static_cast<std::size_t>(nc), tp.c2i_conductance_w_k);
  for (const auto& pc : placement.chiplets)
    if (pc.embedded) c2i[static_cast<std::size_t>(pc.cell)] = tp.c2i_conductance_w_k * tp.embed_coupling_factor;
  for (int c = 0; c < nc; ++c)
    grid.add_edge(thermal_node(THERMAL_CHIPLET, c, nc), thermal_node(THERMAL_INTERPOSER, c, nc), c2i[static_cast<std::size_t>(c)]);

  // Chiplet power lands in the layer the die physically sits in.
  for (std::size_t i = 0; i < placement.chiplets.size(); ++i) {
    const auto& pc = placement.chiplets[i];
    double p = derive_peak_power(cat.at(static_cast<std::size_t>(pc.type)), tp.utilization);
    int layer = pc.embedded ? THERMAL_INTERPOSER : THERMAL_CHIPLET;
    grid.source_w[static_cast<std::size_t>(thermal_node(layer, pc.cell, nc))] += p;
  }
  // Router power scales with each router's lateral port count; routers live in
  // the interposer routing layer.
  for (std::size_t i = 0; i < placement.chiplets.size(); ++i) {
    const auto& pc = placement.chiplets[i];
    if (pc.embedded) continue;
    double p = tp.router_port_power_w * graph.lateral_ports[i];
    grid.source_w[static_cast<std::size_t>(thermal_node(THERMAL_INTERPOSER, pc.cell, nc))] += p;
  }
  return grid;
}

struct ThermalResult {
  double t_peak_c = 0.0;
  std::vector<double> field; // 3 layers x cells, solve order
};

inline ThermalResult peak_temperature(const Placement& placement, const NoiGraph& graph,
                                      const Catalog& cat, const InterposerSpec& ip,
                                      const ThermalParams& tp) {
  ThermalGrid grid = build_thermal_grid(placement, graph, cat, ip, tp);
  ThermalResult res;
  res.field = solve_steady_state(grid, tp.solve);
  res.t_peak_c = grid.ambient_c;
  for (double t : res.field) res.t_peak_c = std::max(res.t_peak_c, t);
  return res;
}

// --- Conductance variation with temperature ---

struct NoiseModel {
  double sigma0 = 0.001;                   // fractional variation at t_ref
  double eta_per_k = std::log(80.0) / 50.0; // fixed by the 300 K and 350 K anchors
  double t_ref_k = 300.0;
};

inline double conductance_variation(double t_kelvin, const NoiseModel& nm = {}) {
  if (t_kelvin < 0.0) throw ValidationError("temperature below absolute zero");
  return nm.sigma0 * std::exp(nm.eta_per_k * (t_kelvin - nm.t_ref_k));
}

// --- Calibration ---

// Peak temperature rises monotonically with sink resistance, so a bisection
// pins the baseline design at the target temperature. Returns the calibrated
// resistance; throws if the target is outside the bracket.
inline double calibrate_sink_resistance(const Placement& placement, const NoiGraph& graph,
                                        const Catalog& cat, const InterposerSpec& ip,
                                        ThermalParams tp, double target_c, double tol_c = 0.1,
                                        double lo = 1e-4, double hi = 10.0) {
  auto peak_at = [&](double r) {
    tp.sink_resistance_k_per_w = r;
    return peak_temperature(placement, graph, cat, ip, tp).t_peak_c;
  };
  double t_lo = peak_at(lo), t_hi = peak_at(hi);
  if (target_c < t_lo || target_c > t_hi)
    throw SolverError("calibration target " + fmt_double(target_c) + " C outside bracket [" +
                      fmt_double(t_lo) + ", " + fmt_double(t_hi) + "] C");
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    double t = peak_at(mid);
    if (std::fabs(t - target_c) <= tol_c) return mid;
    (t < target_c ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace chipletdse
