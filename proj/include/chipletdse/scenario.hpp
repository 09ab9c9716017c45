#pragma once

// Scenario files bind every model input together; running one produces the
// machine-readable result set (pareto.csv, trace.csv, summary.json). Output
// files are staged under temporary names and renamed only after every write
// succeeded, so a failed run leaves no partial artifacts.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chipletdse/evaluate.hpp"
#include "chipletdse/optimizer.hpp"
#include "chipletdse/workload.hpp"

namespace chipletdse {

inline constexpr const char* kVersion = "0.1.0";

struct Scenario {
  std::string name;
  EvalContext ctx;
  OptimizerConfig opt;
  std::vector<int> baseline_alpha; // optional reference composition (calibrate, evaluate)
  std::string output_dir = "out";
  nlohmann::ordered_json echo; // the file as loaded, for summary.json
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline void apply_link_overrides(LinkParams& lp, const nlohmann::json& j) {
  if (j.contains("cycle_s")) lp.cycle_s = j.at("cycle_s").get<double>();
  if (j.contains("width_bits")) lp.width_bits = j.at("width_bits").get<double>();
  if (j.contains("router_delay_cycles")) lp.router_delay_cycles = j.at("router_delay_cycles").get<double>();
  if (j.contains("e_link_lateral_j_bit")) lp.e_link_lateral_j_bit = j.at("e_link_lateral_j_bit").get<double>();
  if (j.contains("e_link_vertical_j_bit")) lp.e_link_vertical_j_bit = j.at("e_link_vertical_j_bit").get<double>();
  if (j.contains("e_router_j_bit")) lp.e_router_j_bit = j.at("e_router_j_bit").get<double>();
  if (j.contains("router_delay_intermediate_only"))
    lp.router_delay_intermediate_only = j.at("router_delay_intermediate_only").get<bool>();
}

inline void apply_thermal_overrides(ThermalParams& tp, const nlohmann::json& j) {
  if (j.contains("ambient_c")) tp.ambient_c = j.at("ambient_c").get<double>();
  if (j.contains("utilization")) tp.utilization = j.at("utilization").get<double>();
  if (j.contains("sink_resistance_k_per_w")) tp.sink_resistance_k_per_w = j.at("sink_resistance_k_per_w").get<double>();
  if (j.contains("board_resistance_k_per_w")) tp.board_resistance_k_per_w = j.at("board_resistance_k_per_w").get<double>();
  if (j.contains("router_port_power_w")) tp.router_port_power_w = j.at("router_port_power_w").get<double>();
  if (j.contains("tim_conductance_w_k")) tp.tim_conductance_w_k = j.at("tim_conductance_w_k").get<double>();
  if (j.contains("c2i_conductance_w_k")) tp.c2i_conductance_w_k = j.at("c2i_conductance_w_k").get<double>();
  if (j.contains("embed_coupling_factor")) tp.embed_coupling_factor = j.at("embed_coupling_factor").get<double>();
  if (j.contains("spreader_lateral_w_k")) tp.spreader_lateral_w_k = j.at("spreader_lateral_w_k").get<double>();
  if (j.contains("chiplet_lateral_w_k")) tp.chiplet_lateral_w_k = j.at("chiplet_lateral_w_k").get<double>();
  if (j.contains("interposer_spread_boost")) tp.interposer_spread_boost = j.at("interposer_spread_boost").get<double>();
}

inline void apply_policy_overrides(MappingPolicy& mp, const nlohmann::json& j) {
  if (j.contains("forbid_reram_for_dynamic")) mp.forbid_reram_for_dynamic = j.at("forbid_reram_for_dynamic").get<bool>();
  if (j.contains("forbid_reram_entirely")) mp.forbid_reram_entirely = j.at("forbid_reram_entirely").get<bool>();
  if (j.contains("disjoint_dnn_partitions")) mp.disjoint_dnn_partitions = j.at("disjoint_dnn_partitions").get<bool>();
}

inline void apply_optimizer_overrides(OptimizerConfig& oc, const nlohmann::json& j) {
  if (j.contains("outer_budget")) oc.outer_budget = j.at("outer_budget").get<int>();
  if (j.contains("inner_budget")) oc.inner_budget = j.at("inner_budget").get<int>();
  if (j.contains("n_init")) oc.n_init = j.at("n_init").get<int>();
  if (j.contains("pool_size")) oc.pool_size = j.at("pool_size").get<int>();
  if (j.contains("archive_capacity")) oc.archive_capacity = j.at("archive_capacity").get<int>();
  if (j.contains("max_count_per_type")) oc.max_count_per_type = j.at("max_count_per_type").get<int>();
  if (j.contains("use_sa_fallback")) oc.use_sa_fallback = j.at("use_sa_fallback").get<bool>();
  if (j.contains("seed")) oc.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace detail

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  std::filesystem::path base = std::filesystem::path(path).parent_path();

  Scenario s;
  s.echo = j;
  s.name = j.value("name", std::filesystem::path(path).stem().string());

  if (!j.contains("catalog")) throw ConfigError("scenario '" + path + "': missing catalog path");
  s.ctx.catalog = load_catalog(detail::resolve(base, j.at("catalog").get<std::string>()).string());

  if (j.contains("interposer")) {
    const auto& ji = j.at("interposer");
    if (ji.is_string())
      s.ctx.interposer = InterposerSpec::defaults(interposer_from_string(ji.get<std::string>()));
    else
      s.ctx.interposer = interposer_from_json(ji);
  }

  if (!j.contains("workloads") || j.at("workloads").empty())
    throw ConfigError("scenario '" + path + "': needs at least one workload path");
  std::vector<WorkloadSpec> parts;
  for (const auto& wp : j.at("workloads"))
    parts.push_back(load_workload(detail::resolve(base, wp.get<std::string>()).string()));
  s.ctx.workload = parts.size() == 1 ? parts[0] : merge_workloads(parts, s.name + ".merged");

  s.ctx.kind = topology_from_string(j.value("topology", std::string("floret")));
  s.ctx.grid.rows = 10;
  s.ctx.grid.cols = 10;
  s.ctx.grid.pitch_mm = 2.0;
  if (j.contains("grid")) {
    const auto& jg = j.at("grid");
    s.ctx.grid.rows = jg.value("rows", 10);
    s.ctx.grid.cols = jg.value("cols", 10);
    s.ctx.grid.pitch_mm = jg.value("pitch_mm", 2.0);
  }
  if (s.ctx.grid.rows <= 0 || s.ctx.grid.cols <= 0 || s.ctx.grid.pitch_mm <= 0)
    throw ConfigError("scenario '" + path + "': grid dimensions must be positive");
  if (j.contains("topology_params")) {
    const auto& jt = j.at("topology_params");
    s.ctx.topo_params.kite_stride = jt.value("kite_stride", s.ctx.topo_params.kite_stride);
    s.ctx.topo_params.floret_hub_stride = jt.value("floret_hub_stride", s.ctx.topo_params.floret_hub_stride);
  }

  if (j.contains("constraints")) {
    const auto& jc = j.at("constraints");
    s.ctx.constraints.t_max_c = jc.value("t_max_c", 75.0);
    s.ctx.constraints.warpage_max_um = jc.value("warpage_max_um", 150.0);
    if (s.ctx.constraints.t_max_c < 0 || s.ctx.constraints.warpage_max_um <= 0)
      throw ConfigError("scenario '" + path + "': constraints must be non-negative");
  }

  s.ctx.link = LinkParams::defaults(s.ctx.interposer.material);
  s.ctx.link.cycle_s = 1e-9 / s.ctx.interposer.clock_ghz;
  if (j.contains("link")) detail::apply_link_overrides(s.ctx.link, j.at("link"));
  if (j.contains("mapping")) detail::apply_policy_overrides(s.ctx.policy, j.at("mapping"));
  if (j.contains("thermal")) detail::apply_thermal_overrides(s.ctx.thermal, j.at("thermal"));
  if (j.contains("optimizer")) detail::apply_optimizer_overrides(s.opt, j.at("optimizer"));
  if (j.contains("baseline_alpha")) {
    s.baseline_alpha = j.at("baseline_alpha").get<std::vector<int>>();
    if (s.baseline_alpha.size() != s.ctx.catalog.size())
      throw ConfigError("scenario '" + path + "': baseline_alpha arity does not match catalog");
  }
  s.output_dir = j.value("output_dir", std::string("out"));
  validate(s.ctx.workload);
  return s;
}

// --- Output emission ---

namespace detail {

struct StagedFile {
  std::filesystem::path final_path;
  std::filesystem::path tmp_path;
};

class OutputStage {
 public:
  explicit OutputStage(const std::filesystem::path& dir) : dir_(dir) {
    std::filesystem::create_directories(dir_);
  }

  void stage(const std::string& name, const std::string& content) {
    StagedFile f{dir_ / name, dir_ / (name + ".tmp")};
    std::ofstream out(f.tmp_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file '" + f.tmp_path.string() + "'");
    out << content;
    out.close();
    if (!out) throw ConfigError("short write to '" + f.tmp_path.string() + "'");
    files_.push_back(f);
  }

  void commit() {
    for (const auto& f : files_) std::filesystem::rename(f.tmp_path, f.final_path);
    files_.clear();
  }

  ~OutputStage() {
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f.tmp_path, ec);
  }

 private:
  std::filesystem::path dir_;
  std::vector<StagedFile> files_;
};

inline std::string alpha_string(const std::vector<int>& alpha) {
  std::string s;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (i) s += '|';
    s += std::to_string(alpha[i]);
  }
  return s;
}

}  // namespace detail

inline std::string pareto_csv(const CoOptimizeResult& res) {
  std::ostringstream os;
  os << "id,alpha,latency_s,energy_j,edp,t_peak_c,max_warpage_um,cost_norm\n";
  std::vector<const DesignPoint*> rows;
  for (const auto& m : res.archive.members()) rows.push_back(&m);
  std::sort(rows.begin(), rows.end(),
            [](const DesignPoint* a, const DesignPoint* b) { return a->id < b->id; });
  for (const DesignPoint* dp : rows) {
    os << dp->id << ',' << detail::alpha_string(dp->composition.totals()) << ','
       << fmt_double(dp->eval.latency_s) << ',' << fmt_double(dp->eval.energy_j) << ','
       << fmt_double(dp->eval.edp) << ',' << fmt_double(dp->eval.t_peak_c) << ','
       << fmt_double(dp->eval.max_warpage_um) << ',' << fmt_double(dp->eval.cost_norm) << '\n';
  }
  return os.str();
}

inline std::string trace_csv(const CoOptimizeResult& res) {
  std::ostringstream os;
  os << "step,alpha,best_edp,incumbent_edp\n";
  for (const auto& row : res.trace)
    os << row.step << ',' << detail::alpha_string(row.alpha) << ','
       << fmt_double(row.alpha_best_edp) << ',' << fmt_double(row.incumbent_edp) << '\n';
  return os.str();
}

inline nlohmann::ordered_json evaluation_to_json(const Evaluation& e) {
  nlohmann::ordered_json j;
  j["latency_s"] = e.latency_s;
  j["energy_j"] = e.energy_j;
  j["edp"] = e.edp;
  j["t_peak_c"] = e.thermal_checked() ? nlohmann::ordered_json(e.t_peak_c)
                                      : nlohmann::ordered_json(nullptr);
  j["max_warpage_um"] = e.max_warpage_um;
  j["cost_norm"] = e.cost_norm;
  j["avg_hops"] = e.avg_hops;
  j["feasible_area"] = e.feasible_area;
  j["feasible_warpage"] = e.feasible_warpage;
  j["feasible_thermal"] = e.feasible_thermal;
  return j;
}

inline nlohmann::ordered_json design_to_json(const DesignPoint& dp) {
  nlohmann::ordered_json j;
  j["id"] = dp.id;
  j["alpha"] = dp.composition.totals();
  j["surface"] = dp.composition.surface;
  j["embedded"] = dp.composition.embedded;
  nlohmann::ordered_json chd = nlohmann::ordered_json::array();
  for (const auto& pc : dp.placement.chiplets) {
    nlohmann::ordered_json cj;
    cj["type"] = pc.type;
    cj["cell"] = pc.cell;
    cj["embedded"] = pc.embedded;
    chd.push_back(cj);
  }
  j["placement"] = chd;
  j["genome"] = {{"start_offset", dp.genome.start_offset},
                 {"advance_before_layer",
                  std::vector<int>(dp.genome.advance_before_layer.begin(),
                                   dp.genome.advance_before_layer.end())}};
  j["evaluation"] = evaluation_to_json(dp.eval);
  return j;
}

struct RunOptions {
  std::string out_dir;                       // overrides scenario output_dir when set
  std::optional<std::uint64_t> seed_override;
  int threads = 1;
  bool dump_mapping = false;
  bool dump_warpage = false;
  bool dump_thermal = false;
};

inline std::string mapping_csv(const WorkloadSpec& wl, const Mapping& m) {
  std::ostringstream os;
  os << "layer,instance,fraction,weight_kb\n";
  for (std::size_t li = 0; li < wl.layers.size(); ++li)
    for (const auto& slice : m.per_layer[li])
      os << wl.layers[li].id << ',' << slice.instance << ',' << fmt_double(slice.fraction) << ','
         << fmt_double(slice.weight_kb) << '\n';
  return os.str();
}

inline std::string warpage_csv(const EvalContext& ctx, double embed_fill, int samples = 256) {
  WarpageParams wp = WarpageParams::from(ctx.interposer, ctx.catalog.chiplet_cte_per_k);
  wp.tau_um = effective_tau_um(wp, embed_fill);
  std::ostringstream os;
  os << "x_mm,kappa_um\n";
  for (int i = 0; i <= samples; ++i) {
    double x = wp.rho_mm * static_cast<double>(i) / samples;
    os << fmt_double(x) << ',' << fmt_double(warpage_at(x, wp)) << '\n';
  }
  return os.str();
}

inline std::string thermal_csv(const EvalContext& ctx, const DesignPoint& dp) {
  NoiGraph graph = build_topology(dp.placement, ctx.topo_params);
  ThermalGrid grid = build_thermal_grid(dp.placement, graph, ctx.catalog, ctx.interposer, ctx.thermal);
  std::vector<double> field = solve_steady_state(grid, ctx.thermal.solve);
  static const char* layer_names[] = {"spreader", "chiplet", "interposer"};
  std::ostringstream os;
  os << "x_mm,y_mm,layer,t_c\n";
  int nc = ctx.grid.cell_count();
  for (int layer = 0; layer < 3; ++layer)
    for (int c = 0; c < nc; ++c)
      os << fmt_double(ctx.grid.x_mm(c)) << ',' << fmt_double(ctx.grid.y_mm(c)) << ','
         << layer_names[layer] << ',' << fmt_double(field[static_cast<std::size_t>(thermal_node(layer, c, nc))])
         << '\n';
  return os.str();
}

// Runs the full co-optimization and writes the report set. Returns the result
// so tests can assert on it without re-parsing the files.
inline CoOptimizeResult run_scenario(const Scenario& scenario, const RunOptions& opts = {}) {
  Scenario s = scenario;
  if (opts.seed_override) s.opt.seed = *opts.seed_override;
  s.opt.threads = opts.threads;

  CoOptimizeResult res = co_optimize(s.ctx, s.opt);
  if (!res.incumbent)
    CDSE_INFO("scenario '%s': no thermally feasible design found", s.name.c_str());

  std::filesystem::path out_dir = opts.out_dir.empty() ? s.output_dir : opts.out_dir;
  detail::OutputStage stage(out_dir);
  stage.stage("pareto.csv", pareto_csv(res));
  stage.stage("trace.csv", trace_csv(res));

  nlohmann::ordered_json summary;
  summary["scenario"] = s.name;
  summary["version"] = kVersion;
  summary["seed"] = s.opt.seed;
  summary["evaluations"] = static_cast<int>(res.trace.size());
  summary["incumbent"] = res.incumbent ? design_to_json(*res.incumbent)
                                       : nlohmann::ordered_json(nullptr);
  summary["incumbent_edp"] = std::isfinite(res.incumbent_edp)
                                 ? nlohmann::ordered_json(res.incumbent_edp)
                                 : nlohmann::ordered_json(nullptr);
  summary["archive_size"] = static_cast<int>(res.archive.size());
  summary["scenario_echo"] = s.echo;
  stage.stage("summary.json", summary.dump(2) + "\n");

  if (res.incumbent) {
    if (opts.dump_mapping) stage.stage("mapping.csv", mapping_csv(s.ctx.workload, res.incumbent->mapping));
    if (opts.dump_warpage) {
      double fill = embed_fill_fraction(res.incumbent->composition, s.ctx.catalog, s.ctx.interposer);
      stage.stage("warpage.csv", warpage_csv(s.ctx, fill));
    }
    if (opts.dump_thermal) stage.stage("thermal.csv", thermal_csv(s.ctx, *res.incumbent));
  }
  stage.commit();
  return res;
}

}  // namespace chipletdse
