#pragma once

// Packaging feasibility: warpage profile and limit, fabrication cost, area check.
//
// The warpage expression mixes thermal and mechanical symbols as published, so
// it only becomes predictive after unit normalization. Everything is evaluated
// in {mm, K, GPa} with a single calibration constant (warp_scale) mapping the
// bracket to micrometers. The shipped defaults were fitted jointly so that:
// silicon is inside the 150 um limit at both 400 and 864 mm^2; glass is
// marginal at 400 mm^2, far outside at 864 mm^2, and pulled back under
// 1.25x the silicon level by ~10% embedded fill; and the glass/silicon ratio
// at equal geometry stays above 5.

#include <cmath>
#include <string>
#include <vector>

#include "chipletdse/catalog.hpp"
#include "chipletdse/common.hpp"

namespace chipletdse {

struct WarpageParams {
  double tau_um = 100.0;         // interposer thickness
  double delta_psi_per_k = 0.8e-6; // |CTE(chiplet) - CTE(interposer)|
  double delta_t_k = 80.0;       // manufacturing thermal cycling range 25-105 C
  double lambda_w_mk = 130.0;    // interposer thermal conductivity
  double stiffness_d = 1.0;      // flexural rigidity, relative units
  double youngs_gpa = 165.0;
  double d_mm = 1.0;             // half chiplet length
  double rho_mm = 10.0;          // half interposer length
  double warp_scale = 24000.0;   // unit normalization, calibrated (see above)
  double youngs_to_wavenumber = 0.01; // k [1/mm] = E [GPa] * this
  double relief_coefficient = 7.8;    // embedded fill relief on effective tau
  double min_tau_fraction = 0.05;     // relief never drives tau below this

  static WarpageParams from(const InterposerSpec& ip, double chiplet_cte_per_k) {
    WarpageParams p;
    p.tau_um = ip.thickness_um;
    p.delta_psi_per_k = std::fabs(chiplet_cte_per_k - ip.cte_per_k);
    p.lambda_w_mk = ip.thermal_conductivity_w_mk;
    p.stiffness_d = ip.stiffness_d;
    p.youngs_gpa = ip.youngs_modulus_gpa;
    p.rho_mm = std::sqrt(ip.area_mm2()) / 2.0;
    return p;
  }

  void validate() const {
    if (tau_um <= 0 || delta_t_k <= 0 || lambda_w_mk <= 0 || stiffness_d <= 0 ||
        youngs_gpa <= 0 || d_mm <= 0 || rho_mm <= 0)
      throw ValidationError("warpage parameters must be positive");
    if (rho_mm < d_mm) throw ValidationError("interposer half-length below chiplet half-length");
  }
};

namespace detail {

// (cosh(a) - 1) / cosh(b) without overflow: for large arguments cosh(x) ~ e^x/2,
// so the ratio collapses to exp(a - b) with correction factors that stay in range.
inline double cosh_ratio(double a, double b) {
  a = std::fabs(a);
  b = std::fabs(b);
  if (b < 30.0) return (std::cosh(a) - 1.0) / std::cosh(b);
  if (a - b > 700.0) throw SolverError("warpage profile overflow: cosh argument spread too large");
  double num = 1.0 + std::exp(-2.0 * a) - 2.0 * std::exp(-a); // e^-a * (cosh a - 1) * 2
  double den = 1.0 + std::exp(-2.0 * b);                      // e^-b * cosh b * 2
  return std::exp(a - b) * num / den;
}

}  // namespace detail

// Vertical displacement at lateral position x from the package center, in um.
inline double warpage_at(double x_mm, const WarpageParams& p) {
  p.validate();
  if (std::fabs(x_mm) > p.rho_mm * (1.0 + 1e-12))
    throw ValidationError("warpage sample point beyond interposer half-length");
  double k = p.youngs_gpa * p.youngs_to_wavenumber;
  double bracket = x_mm * x_mm / 2.0 - detail::cosh_ratio(k * x_mm * p.d_mm, k * p.rho_mm) / (k * k);
  double prefactor = p.warp_scale * (p.tau_um * p.delta_psi_per_k * p.delta_t_k) /
                     (2.0 * p.lambda_w_mk * p.stiffness_d);
  return prefactor * bracket;
}

struct WarpageResult {
  double max_warpage_um = 0.0;
  double x_at_max_mm = 0.0;
  bool feasible = false;
};

// Embedding thins the effective interposer: tau_eff = tau * (1 - relief * fill),
// floored so that heavy embedding cannot flip the displacement sign.
inline double effective_tau_um(const WarpageParams& p, double embed_fill_fraction) {
  double factor = 1.0 - p.relief_coefficient * embed_fill_fraction;
  return p.tau_um * std::max(factor, p.min_tau_fraction);
}

inline WarpageResult check_warpage(const WarpageParams& base, double embed_fill_fraction,
                                   double kappa_max_um = 150.0, int samples = 1024) {
  WarpageParams p = base;
  p.tau_um = effective_tau_um(base, embed_fill_fraction);
  WarpageResult r;
  for (int i = 0; i <= samples; ++i) {
    double x = p.rho_mm * static_cast<double>(i) / samples;
    double k = warpage_at(x, p);
    if (k > r.max_warpage_um) {
      r.max_warpage_um = k;
      r.x_at_max_mm = x;
    }
  }
  r.feasible = r.max_warpage_um <= kappa_max_um;
  return r;
}

// Embedded chiplet area over interposer lateral area; drives the tau relief.
inline double embed_fill_fraction(const Composition& comp, const Catalog& cat,
                                  const InterposerSpec& ip) {
  double embedded = 0.0;
  for (std::size_t i = 0; i < cat.size(); ++i) embedded += comp.embedded[i] * cat.at(i).area_mm2;
  return embedded / ip.area_mm2();
}

// --- Fabrication cost ---

// Vertical-via parameters; silicon TSV vs glass TGV.
struct TsvParams {
  int count_per_chiplet = 32;
  double area_factor = 1.0;        // footprint relative to a silicon TSV
  double depth_um = 150.0;
  double cost_rel_unit_area = 1.0; // cost relative to interposer unit area

  static TsvParams silicon() { return {}; }
  static TsvParams glass() {
    TsvParams t;
    t.count_per_chiplet = 128;
    t.area_factor = 16.0;
    t.cost_rel_unit_area = 64.0;
    return t;
  }
  static TsvParams defaults(Interposer m) { return m == Interposer::silicon ? silicon() : glass(); }
};

struct CostParams {
  double d0_per_mm2 = 0.001;     // defect density in the yield exponent
  double a_ref_mm2 = 864.0;      // reference system area
  double wafer_area_mm2 = 70685.0; // 300 mm wafer
  double ref_chiplet_area_mm2 = 4.0; // reference die size; sets l_ref
  double chiplet_cost_scale = 100.0; // relative units per unit cost factor
  double tsv_base_area_mm2 = 0.01;   // silicon TSV footprint incl. keep-out

  double l_ref() const { return wafer_area_mm2 / ref_chiplet_area_mm2; }
};

struct CostBreakdown {
  double interposer = 0.0;
  double chiplets = 0.0;
  double tsvs = 0.0;
  double total = 0.0;
};

// Yield-style scaling between two system areas: exp(-D0 * (A1 - A2)).
inline double relative_cost(double a1_mm2, double a2_mm2, double d0_per_mm2 = 0.001) {
  if (a1_mm2 < 0 || a2_mm2 < 0) throw ValidationError("negative area in relative_cost");
  return std::exp(-d0_per_mm2 * (a1_mm2 - a2_mm2));
}

inline CostBreakdown fabrication_cost(const Composition& comp, const Catalog& cat,
                                      const InterposerSpec& ip, const CostParams& cp = {},
                                      const TsvParams* tsv_override = nullptr) {
  AggregateMetrics am = aggregate_metrics(comp, cat);
  TsvParams tsv = tsv_override ? *tsv_override : TsvParams::defaults(ip.material);

  CostBreakdown b;
  b.interposer = ip.unit_cost_per_mm2 * ip.area_mm2();
  if (am.chiplet_count > 0) {
    // Chiplets-per-wafer ratio L_ref/L reduces to mean die area over the
    // reference die area; the exponential rewards systems below the 864 mm^2
    // reference footprint.
    double mean_area = am.chiplet_area_mm2 / am.chiplet_count;
    double l_sys = cp.wafer_area_mm2 / mean_area;
    double factor = (cp.l_ref() / l_sys) * relative_cost(cp.a_ref_mm2, ip.area_mm2(), cp.d0_per_mm2);
    b.chiplets = cp.chiplet_cost_scale * factor;
    b.tsvs = static_cast<double>(am.chiplet_count) * tsv.count_per_chiplet *
             tsv.cost_rel_unit_area * cp.tsv_base_area_mm2 * ip.unit_cost_per_mm2;
  }
  b.total = b.interposer + b.chiplets + b.tsvs;
  return b;
}

// --- Area constraint ---

struct AreaCheck {
  double surface_area_mm2 = 0.0;
  double embedded_area_mm2 = 0.0;
  double surface_capacity_mm2 = 0.0;
  double embedded_capacity_mm2 = 0.0;
  bool feasible = false;
};

inline AreaCheck check_area(const Composition& comp, const Catalog& cat, const InterposerSpec& ip) {
  AggregateMetrics am = aggregate_metrics(comp, cat);
  AreaCheck c;
  c.surface_area_mm2 = am.surface_area_mm2;
  c.embedded_area_mm2 = am.embedded_area_mm2;
  c.surface_capacity_mm2 = ip.area_mm2();
  c.embedded_capacity_mm2 = ip.area_mm2() * ip.embed_capacity_fraction;
  c.feasible = c.surface_area_mm2 <= c.surface_capacity_mm2 + 1e-9 &&
               c.embedded_area_mm2 <= c.embedded_capacity_mm2 + 1e-9;
  return c;
}

}  // namespace chipletdse
