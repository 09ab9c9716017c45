// Command-line front end: scenario runs, single-design evaluation, topology
// statistics, thermal calibration, and summary pretty-printing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "chipletdse/scenario.hpp"

namespace cdse = chipletdse;

namespace {

cdse::Placement placement_from_design_json(const nlohmann::json& j, const cdse::Scenario& s) {
  if (j.contains("placement")) {
    cdse::Placement p;
    p.kind = s.ctx.kind;
    p.grid = s.ctx.grid;
    for (const auto& cj : j.at("placement").at("chiplets")) {
      cdse::PlacedChiplet pc;
      pc.type = cj.at("type").get<int>();
      pc.cell = cj.at("cell").get<int>();
      pc.embedded = cj.value("embedded", false);
      if (pc.type < 0 || pc.type >= static_cast<int>(s.ctx.catalog.size()))
        throw cdse::ConfigError("design placement references unknown chiplet type");
      p.chiplets.push_back(pc);
    }
    p.rebuild();
    return p;
  }
  if (!j.contains("alpha"))
    throw cdse::ConfigError("design file needs either 'alpha' or an explicit 'placement'");
  std::vector<int> alpha = j.at("alpha").get<std::vector<int>>();
  if (alpha.size() != s.ctx.catalog.size())
    throw cdse::ConfigError("design alpha arity does not match catalog");
  auto seeded = cdse::detail::seed_placement(alpha, s.ctx);
  if (!seeded) throw cdse::ValidationError("design alpha does not fit the placement grid");
  return *seeded;
}

cdse::MappingGenome genome_from_design_json(const nlohmann::json& j) {
  cdse::MappingGenome g;
  if (!j.contains("genome")) return g;
  const auto& gj = j.at("genome");
  g.start_offset = gj.value("start_offset", 0);
  if (gj.contains("advance_before_layer"))
    for (int li : gj.at("advance_before_layer").get<std::vector<int>>())
      g.advance_before_layer.insert(li);
  return g;
}

int cmd_run(const std::string& scenario_path, const cdse::RunOptions& opts) {
  cdse::Scenario s = cdse::load_scenario(scenario_path);
  cdse::CoOptimizeResult res = cdse::run_scenario(s, opts);
  std::filesystem::path out = opts.out_dir.empty() ? s.output_dir : opts.out_dir;
  std::fprintf(stderr, "wrote %s/{pareto.csv,trace.csv,summary.json}\n", out.string().c_str());
  if (res.incumbent)
    std::fprintf(stderr, "incumbent edp %s at alpha %s\n",
                 cdse::fmt_double(res.incumbent_edp).c_str(),
                 cdse::detail::alpha_string(res.incumbent_alpha).c_str());
  else
    std::fprintf(stderr, "no thermally feasible design found\n");
  return 0;
}

int cmd_evaluate(const std::string& scenario_path, const std::string& design_path,
                 const std::string& out_path) {
  cdse::Scenario s = cdse::load_scenario(scenario_path);
  std::ifstream in(design_path);
  if (!in) throw cdse::ConfigError("cannot open design file '" + design_path + "'");
  nlohmann::json dj;
  in >> dj;

  cdse::Placement placement = placement_from_design_json(dj, s);
  cdse::MappingGenome genome = genome_from_design_json(dj);
  cdse::DesignPoint dp = cdse::evaluate_design(s.ctx, placement, genome, true, false);
  dp.id = 0;

  nlohmann::ordered_json out = cdse::design_to_json(dp);
  cdse::AggregateMetrics am = cdse::aggregate_metrics(dp.composition, s.ctx.catalog);
  out["aggregate"] = {{"total_tops", am.total_tops},
                     {"total_storage_mb", am.total_storage_mb},
                     {"chiplet_area_mm2", am.chiplet_area_mm2},
                     {"chiplet_count", am.chiplet_count}};
  std::string text = out.dump(2) + "\n";
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream of(out_path, std::ios::binary);
    if (!of) throw cdse::ConfigError("cannot write '" + out_path + "'");
    of << text;
  }
  return 0;
}

int cmd_topology(const std::string& scenario_path, const std::string& kind_arg, int rows, int cols,
                 bool all_kinds) {
  cdse::GridDims grid;
  cdse::TopologyParams params;
  std::vector<cdse::TopologyKind> kinds;
  if (!scenario_path.empty()) {
    cdse::Scenario s = cdse::load_scenario(scenario_path);
    grid = s.ctx.grid;
    params = s.ctx.topo_params;
    kinds.push_back(s.ctx.kind);
  } else {
    grid.rows = rows;
    grid.cols = cols;
    kinds.push_back(cdse::topology_from_string(kind_arg));
  }
  if (all_kinds)
    kinds = {cdse::TopologyKind::mesh, cdse::TopologyKind::kite, cdse::TopologyKind::hexamesh,
             cdse::TopologyKind::floret};

  std::printf("kind,rows,cols,avg_lateral_ports,link_count,node_count,min_ports,max_ports\n");
  for (auto k : kinds) {
    cdse::PortStats st = cdse::port_stats(k, grid, params);
    std::printf("%s,%d,%d,%s,%d,%d,%d,%d\n", cdse::to_string(k), grid.rows, grid.cols,
                cdse::fmt_double(st.avg_lateral_ports).c_str(), st.link_count, st.node_count,
                st.min_ports, st.max_ports);
  }
  return 0;
}

int cmd_calibrate(const std::string& scenario_path, double target_c, double tol_c) {
  cdse::Scenario s = cdse::load_scenario(scenario_path);
  if (s.baseline_alpha.empty())
    throw cdse::ConfigError("calibrate needs 'baseline_alpha' in the scenario file");
  auto seeded = cdse::detail::seed_placement(s.baseline_alpha, s.ctx);
  if (!seeded) throw cdse::ValidationError("baseline_alpha does not fit the placement grid");
  cdse::NoiGraph graph = cdse::build_topology(*seeded, s.ctx.topo_params);

  double r = cdse::calibrate_sink_resistance(*seeded, graph, s.ctx.catalog, s.ctx.interposer,
                                             s.ctx.thermal, target_c, tol_c);
  cdse::ThermalParams tp = s.ctx.thermal;
  tp.sink_resistance_k_per_w = r;
  double t = cdse::peak_temperature(*seeded, graph, s.ctx.catalog, s.ctx.interposer, tp).t_peak_c;

  nlohmann::ordered_json out;
  out["target_c"] = target_c;
  out["calibrated_sink_resistance_k_per_w"] = r;
  out["t_peak_c"] = t;
  out["utilization"] = tp.utilization;
  std::fputs((out.dump(2) + "\n").c_str(), stdout);
  return 0;
}

int cmd_report(const std::string& summary_path) {
  std::ifstream in(summary_path);
  if (!in) throw cdse::ConfigError("cannot open summary file '" + summary_path + "'");
  nlohmann::ordered_json j;
  in >> j;
  std::printf("scenario    %s\n", j.value("scenario", std::string("?")).c_str());
  std::printf("version     %s\n", j.value("version", std::string("?")).c_str());
  std::printf("seed        %llu\n",
              static_cast<unsigned long long>(j.value("seed", std::uint64_t{0})));
  std::printf("evaluations %d\n", j.value("evaluations", 0));
  std::printf("archive     %d designs\n", j.value("archive_size", 0));
  if (j.contains("incumbent") && !j.at("incumbent").is_null()) {
    const auto& inc = j.at("incumbent");
    std::string alpha;
    for (const auto& v : inc.at("alpha")) {
      if (!alpha.empty()) alpha += "|";
      alpha += std::to_string(v.get<int>());
    }
    const auto& ev = inc.at("evaluation");
    std::printf("incumbent   alpha=%s\n", alpha.c_str());
    std::printf("  latency   %s s\n", cdse::fmt_double(ev.value("latency_s", 0.0)).c_str());
    std::printf("  energy    %s J\n", cdse::fmt_double(ev.value("energy_j", 0.0)).c_str());
    std::printf("  edp       %s Js\n", cdse::fmt_double(ev.value("edp", 0.0)).c_str());
    if (!ev.at("t_peak_c").is_null())
      std::printf("  t_peak    %s C\n", cdse::fmt_double(ev.value("t_peak_c", 0.0)).c_str());
    std::printf("  warpage   %s um\n", cdse::fmt_double(ev.value("max_warpage_um", 0.0)).c_str());
    std::printf("  cost      %s\n", cdse::fmt_double(ev.value("cost_norm", 0.0)).c_str());
  } else {
    std::printf("incumbent   none (no thermally feasible design)\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-space exploration for 2.5D chiplet systems on silicon and glass interposers"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, design_path, out_path, summary_path;
  std::string kind_arg = "mesh";
  int rows = 10, cols = 10;
  bool all_kinds = false;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool dump_mapping = false, dump_warpage = false, dump_thermal = false;
  double target_c = 75.0, tol_c = 0.5;

  auto* run = app.add_subcommand("run", "Run the co-optimization for a scenario");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides scenario)");
  run->add_option("--seed", seed, "Seed override");
  run->add_option("--threads", threads, "Worker thread cap");
  run->add_flag("--dump-mapping", dump_mapping, "Write mapping.csv for the incumbent");
  run->add_flag("--dump-warpage", dump_warpage, "Write warpage.csv profile");
  run->add_flag("--dump-thermal", dump_thermal, "Write thermal.csv field");

  auto* ev = app.add_subcommand("evaluate", "Evaluate one explicit design, no optimization");
  ev->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  ev->add_option("--design", design_path, "Design JSON file (alpha or placement + genome)")->required();
  ev->add_option("--out", out_path, "Write the evaluation JSON here instead of stdout");

  auto* topo = app.add_subcommand("topology", "Print NoI statistics");
  topo->add_option("--scenario", scenario_path, "Take grid and kind from this scenario");
  topo->add_option("--kind", kind_arg, "mesh|kite|hexamesh|floret");
  topo->add_option("--rows", rows, "Grid rows");
  topo->add_option("--cols", cols, "Grid cols");
  topo->add_flag("--all", all_kinds, "All four topology kinds");

  auto* cal = app.add_subcommand("calibrate", "Bisect sink resistance to a target peak temperature");
  cal->add_option("--scenario", scenario_path, "Scenario JSON file with baseline_alpha")->required();
  cal->add_option("--target", target_c, "Target peak temperature, C");
  cal->add_option("--tol", tol_c, "Temperature tolerance, C");

  auto* rep = app.add_subcommand("report", "Pretty-print a summary.json");
  rep->add_option("summary", summary_path, "Path to summary.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      cdse::RunOptions opts;
      opts.out_dir = out_dir;
      opts.seed_override = seed;
      opts.threads = threads;
      opts.dump_mapping = dump_mapping;
      opts.dump_warpage = dump_warpage;
      opts.dump_thermal = dump_thermal;
      return cmd_run(scenario_path, opts);
    }
    if (ev->parsed()) return cmd_evaluate(scenario_path, design_path, out_path);
    if (topo->parsed()) return cmd_topology(scenario_path, kind_arg, rows, cols, all_kinds);
    if (cal->parsed()) return cmd_calibrate(scenario_path, target_c, tol_c);
    if (rep->parsed()) return cmd_report(summary_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
