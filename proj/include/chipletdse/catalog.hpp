#pragma once

// Chiplet catalog: per-type specs, composition aggregates, peak-power derivation
// and router-area reclamation.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chipletdse/common.hpp"

namespace chipletdse {

enum class MemTech { ReRAM, SRAM };

inline const char* to_string(MemTech t) { return t == MemTech::ReRAM ? "ReRAM" : "SRAM"; }

inline MemTech mem_tech_from_string(const std::string& s) {
  if (s == "ReRAM" || s == "reram") return MemTech::ReRAM;
  if (s == "SRAM" || s == "sram") return MemTech::SRAM;
  throw ConfigError("unknown mem_tech '" + s + "' (expected ReRAM or SRAM)");
}

struct ChipletSpec {
  std::string name;
  MemTech mem_tech = MemTech::SRAM;
  int crossbar_rows = 0;
  int crossbar_cols = 0;
  int bits_per_cell = 0;
  int adc_precision_bits = 0;
  double clock_mhz = 0.0;
  double storage_kb = 0.0;
  double area_mm2 = 0.0;
  double tops = 0.0;             // peak throughput at utilization 1
  double energy_per_mac_j = 0.0; // joules per MAC
  bool embeddable = false;
  std::optional<double> peak_power_w; // overrides the derived value when set
};

struct Catalog {
  std::vector<ChipletSpec> chiplets;
  double chiplet_cte_per_k = 3.4e-6; // composite die+attach CTE, shared by all types

  std::size_t size() const { return chiplets.size(); }
  const ChipletSpec& at(std::size_t i) const { return chiplets.at(i); }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < chiplets.size(); ++i)
      if (chiplets[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

// Interposer material/geometry plus the electrical and mechanical constants the
// downstream models key off. Defaults follow the silicon/glass contrast the cost,
// warpage and thermal models depend on: glass clocks faster and costs an eighth
// per unit area, but conducts heat poorly and mismatches the die CTE badly.
struct InterposerSpec {
  Interposer material = Interposer::silicon;
  double width_mm = 20.0;
  double height_mm = 20.0;
  double thickness_um = 100.0;
  double thermal_conductivity_w_mk = 130.0;
  double youngs_modulus_gpa = 165.0;
  double stiffness_d = 1.0;            // flexural rigidity, relative units
  double cte_per_k = 2.6e-6;
  double unit_cost_per_mm2 = 1.0;      // relative units (silicon = 1)
  double clock_ghz = 1.15;             // NoI link clock
  double embed_capacity_fraction = 1.0; // share of lateral area usable for embedding

  double area_mm2() const { return width_mm * height_mm; }

  static InterposerSpec silicon(double width_mm = 20.0, double height_mm = 20.0) {
    InterposerSpec s;
    s.width_mm = width_mm;
    s.height_mm = height_mm;
    return s;
  }

  static InterposerSpec glass(double width_mm = 20.0, double height_mm = 20.0) {
    InterposerSpec s;
    s.material = Interposer::glass;
    s.width_mm = width_mm;
    s.height_mm = height_mm;
    s.thermal_conductivity_w_mk = 1.0;
    s.youngs_modulus_gpa = 70.0;
    s.stiffness_d = 183.0;
    s.cte_per_k = 9.3e-6;
    s.unit_cost_per_mm2 = 0.125;
    s.clock_ghz = 2.0;
    return s;
  }

  static InterposerSpec defaults(Interposer m, double width_mm = 20.0, double height_mm = 20.0) {
    return m == Interposer::silicon ? silicon(width_mm, height_mm) : glass(width_mm, height_mm);
  }
};

inline InterposerSpec interposer_from_json(const nlohmann::json& j) {
  InterposerSpec s = InterposerSpec::defaults(
      interposer_from_string(j.value("material", std::string("silicon"))));
  if (j.contains("width_mm")) s.width_mm = j.at("width_mm").get<double>();
  if (j.contains("height_mm")) s.height_mm = j.at("height_mm").get<double>();
  if (j.contains("thickness_um")) s.thickness_um = j.at("thickness_um").get<double>();
  if (j.contains("thermal_conductivity_w_mk"))
    s.thermal_conductivity_w_mk = j.at("thermal_conductivity_w_mk").get<double>();
  if (j.contains("youngs_modulus_gpa")) s.youngs_modulus_gpa = j.at("youngs_modulus_gpa").get<double>();
  if (j.contains("stiffness_d")) s.stiffness_d = j.at("stiffness_d").get<double>();
  if (j.contains("cte_per_k")) s.cte_per_k = j.at("cte_per_k").get<double>();
  if (j.contains("unit_cost_per_mm2")) s.unit_cost_per_mm2 = j.at("unit_cost_per_mm2").get<double>();
  if (j.contains("clock_ghz")) s.clock_ghz = j.at("clock_ghz").get<double>();
  if (j.contains("embed_capacity_fraction"))
    s.embed_capacity_fraction = j.at("embed_capacity_fraction").get<double>();
  if (s.width_mm <= 0 || s.height_mm <= 0 || s.thickness_um <= 0 ||
      s.thermal_conductivity_w_mk <= 0 || s.youngs_modulus_gpa <= 0 || s.stiffness_d <= 0 ||
      s.clock_ghz <= 0)
    throw ValidationError("interposer spec has non-positive dimension or material constant");
  return s;
}

inline nlohmann::ordered_json interposer_to_json(const InterposerSpec& s) {
  nlohmann::ordered_json j;
  j["material"] = to_string(s.material);
  j["width_mm"] = s.width_mm;
  j["height_mm"] = s.height_mm;
  j["thickness_um"] = s.thickness_um;
  j["thermal_conductivity_w_mk"] = s.thermal_conductivity_w_mk;
  j["youngs_modulus_gpa"] = s.youngs_modulus_gpa;
  j["stiffness_d"] = s.stiffness_d;
  j["cte_per_k"] = s.cte_per_k;
  j["unit_cost_per_mm2"] = s.unit_cost_per_mm2;
  j["clock_ghz"] = s.clock_ghz;
  j["embed_capacity_fraction"] = s.embed_capacity_fraction;
  return j;
}

// Counts per catalog type, split by where the chiplet sits.
struct Composition {
  std::vector<int> surface;
  std::vector<int> embedded;

  static Composition surface_only(std::vector<int> counts) {
    Composition c;
    c.embedded.assign(counts.size(), 0);
    c.surface = std::move(counts);
    return c;
  }

  std::vector<int> totals() const {
    std::vector<int> t(surface.size());
    for (std::size_t i = 0; i < surface.size(); ++i) t[i] = surface[i] + embedded[i];
    return t;
  }

  int total_count() const {
    int n = 0;
    for (std::size_t i = 0; i < surface.size(); ++i) n += surface[i] + embedded[i];
    return n;
  }
};

struct AggregateMetrics {
  double total_tops = 0.0;
  double total_storage_kb = 0.0;
  double total_storage_mb = 0.0; // KB / 1024
  double surface_area_mm2 = 0.0;
  double embedded_area_mm2 = 0.0;
  double chiplet_area_mm2 = 0.0; // surface + embedded
  int chiplet_count = 0;
};

inline void validate(const Catalog& cat) {
  if (cat.chiplets.empty()) throw ValidationError("catalog has no chiplet types");
  for (const auto& c : cat.chiplets) {
    if (c.name.empty()) throw ValidationError("catalog entry with empty name");
    if (c.storage_kb <= 0 || c.area_mm2 <= 0 || c.tops <= 0 || c.energy_per_mac_j <= 0)
      throw ValidationError("chiplet '" + c.name + "' has non-positive storage/area/tops/energy");
    if (c.embeddable && c.mem_tech != MemTech::SRAM)
      throw ValidationError("chiplet '" + c.name + "' is embeddable but not SRAM");
    if (c.peak_power_w && *c.peak_power_w < 0)
      throw ValidationError("chiplet '" + c.name + "' has negative peak_power_w override");
  }
  for (std::size_t i = 0; i < cat.chiplets.size(); ++i)
    for (std::size_t j = i + 1; j < cat.chiplets.size(); ++j)
      if (cat.chiplets[i].name == cat.chiplets[j].name)
        throw ValidationError("duplicate chiplet name '" + cat.chiplets[i].name + "'");
}

inline void validate(const Composition& comp, const Catalog& cat) {
  if (comp.surface.size() != cat.size() || comp.embedded.size() != cat.size())
    throw ValidationError("composition arity does not match catalog type count");
  for (std::size_t i = 0; i < cat.size(); ++i) {
    if (comp.surface[i] < 0 || comp.embedded[i] < 0)
      throw ValidationError("negative count for chiplet '" + cat.at(i).name + "'");
    if (comp.embedded[i] > 0 && !cat.at(i).embeddable)
      throw ValidationError("chiplet '" + cat.at(i).name + "' cannot be embedded");
  }
}

inline AggregateMetrics aggregate_metrics(const Composition& comp, const Catalog& cat) {
  validate(comp, cat);
  AggregateMetrics m;
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const auto& c = cat.at(i);
    int n = comp.surface[i] + comp.embedded[i];
    m.total_tops += n * c.tops;
    m.total_storage_kb += n * c.storage_kb;
    m.surface_area_mm2 += comp.surface[i] * c.area_mm2;
    m.embedded_area_mm2 += comp.embedded[i] * c.area_mm2;
    m.chiplet_count += n;
  }
  m.total_storage_mb = m.total_storage_kb / 1024.0;
  m.chiplet_area_mm2 = m.surface_area_mm2 + m.embedded_area_mm2;
  return m;
}

// Peak electrical power of one chiplet: utilization x throughput x energy/MAC.
inline double derive_peak_power(const ChipletSpec& c, double utilization = 1.0) {
  if (utilization < 0.0 || utilization > 1.0)
    throw ValidationError("utilization must lie in [0, 1]");
  if (c.peak_power_w) return *c.peak_power_w * utilization;
  return utilization * c.tops * 1e12 * c.energy_per_mac_j;
}

inline double power_density_w_mm2(const ChipletSpec& c) {
  return derive_peak_power(c, 1.0) / c.area_mm2;
}

enum class FillPolicy {
  low_power,    // whole chiplets of the lowest peak-power-density type that fits (default)
  proportional, // largest-remainder fill proportional to the existing mix
};

struct ReclaimResult {
  Composition composition; // with added surface chiplets
  double tops_before = 0.0;
  double tops_after = 0.0;
  double freed_area_mm2 = 0.0;
  double used_area_mm2 = 0.0;
};

// Embedding NoI routers into the interposer frees router_area_pct of the current
// chiplet area; the freed area hosts extra surface chiplets. Whole chiplets only,
// so the realized gain undershoots the area budget.
inline ReclaimResult reclaim_router_area(const Composition& comp, const Catalog& cat,
                                         double router_area_pct,
                                         FillPolicy policy = FillPolicy::low_power) {
  if (router_area_pct < 0.0 || router_area_pct >= 1.0)
    throw ValidationError("router_area_pct must lie in [0, 1)");
  AggregateMetrics before = aggregate_metrics(comp, cat);
  ReclaimResult r;
  r.composition = comp;
  r.tops_before = before.total_tops;
  r.freed_area_mm2 = router_area_pct * before.chiplet_area_mm2;

  double budget = r.freed_area_mm2;
  if (policy == FillPolicy::low_power) {
    // Types ordered by ascending peak power density; ties by catalog order.
    std::vector<std::size_t> order(cat.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return power_density_w_mm2(cat.at(a)) < power_density_w_mm2(cat.at(b));
    });
    for (std::size_t t : order) {
      int n = static_cast<int>(std::floor(budget / cat.at(t).area_mm2));
      if (n <= 0) continue;
      r.composition.surface[t] += n;
      budget -= n * cat.at(t).area_mm2;
    }
  } else {
    // Proportional: target per-type areas matching the existing mix share, then
    // round down to whole chiplets.
    std::vector<int> totals = comp.totals();
    double mix_area = before.chiplet_area_mm2;
    if (mix_area > 0.0) {
      for (std::size_t t = 0; t < cat.size(); ++t) {
        double share = totals[t] * cat.at(t).area_mm2 / mix_area;
        int n = static_cast<int>(std::floor(share * r.freed_area_mm2 / cat.at(t).area_mm2));
        n = std::min(n, static_cast<int>(std::floor(budget / cat.at(t).area_mm2)));
        if (n <= 0) continue;
        r.composition.surface[t] += n;
        budget -= n * cat.at(t).area_mm2;
      }
    }
  }
  r.used_area_mm2 = r.freed_area_mm2 - budget;
  r.tops_after = aggregate_metrics(r.composition, cat).total_tops;
  return r;
}

// --- JSON I/O ---

inline ChipletSpec chiplet_from_json(const nlohmann::json& j) {
  ChipletSpec c;
  c.name = j.at("name").get<std::string>();
  c.mem_tech = mem_tech_from_string(j.at("mem_tech").get<std::string>());
  c.crossbar_rows = j.at("crossbar_rows").get<int>();
  c.crossbar_cols = j.at("crossbar_cols").get<int>();
  c.bits_per_cell = j.at("bits_per_cell").get<int>();
  c.adc_precision_bits = j.at("adc_precision_bits").get<int>();
  c.clock_mhz = j.at("clock_mhz").get<double>();
  c.storage_kb = j.at("storage_kb").get<double>();
  c.area_mm2 = j.at("area_mm2").get<double>();
  c.tops = j.at("tops").get<double>();
  c.energy_per_mac_j = j.at("energy_per_mac_j").get<double>();
  c.embeddable = j.at("embeddable").get<bool>();
  if (j.contains("peak_power_w")) c.peak_power_w = j.at("peak_power_w").get<double>();
  return c;
}

inline nlohmann::ordered_json chiplet_to_json(const ChipletSpec& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["mem_tech"] = to_string(c.mem_tech);
  j["crossbar_rows"] = c.crossbar_rows;
  j["crossbar_cols"] = c.crossbar_cols;
  j["bits_per_cell"] = c.bits_per_cell;
  j["adc_precision_bits"] = c.adc_precision_bits;
  j["clock_mhz"] = c.clock_mhz;
  j["storage_kb"] = c.storage_kb;
  j["area_mm2"] = c.area_mm2;
  j["tops"] = c.tops;
  j["energy_per_mac_j"] = c.energy_per_mac_j;
  j["embeddable"] = c.embeddable;
  if (c.peak_power_w) j["peak_power_w"] = *c.peak_power_w;
  return j;
}

inline Catalog catalog_from_json(const nlohmann::json& j) {
  Catalog cat;
  if (j.contains("chiplet_cte_per_k")) cat.chiplet_cte_per_k = j.at("chiplet_cte_per_k").get<double>();
  for (const auto& cj : j.at("chiplets")) cat.chiplets.push_back(chiplet_from_json(cj));
  validate(cat);
  return cat;
}

inline Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open catalog file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("catalog '" + path + "': " + e.what());
  }
  return catalog_from_json(j);
}

}  // namespace chipletdse
