#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "chipletdse/scenario.hpp"

using namespace chipletdse;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("scenario file loads every section") {
  Scenario s = load_scenario(TEST_DATA_DIR "/scenarios/scenario_tiny.json");
  REQUIRE(s.name == "scenario_tiny");
  REQUIRE(s.ctx.catalog.size() == 2);
  REQUIRE(s.ctx.interposer.material == Interposer::silicon);
  REQUIRE(s.ctx.interposer.width_mm == 4.0);
  REQUIRE(s.ctx.workload.layers.size() == 3);
  REQUIRE(s.ctx.kind == TopologyKind::floret);
  REQUIRE(s.ctx.grid.rows == 2);
  REQUIRE(s.ctx.grid.cols == 2);
  REQUIRE(s.ctx.grid.pitch_mm == 2.0);
  REQUIRE(s.ctx.constraints.t_max_c == 75.0);
  REQUIRE(s.ctx.constraints.warpage_max_um == 150.0);
  REQUIRE(s.opt.outer_budget == 6);
  REQUIRE(s.opt.inner_budget == 60);
  REQUIRE(s.opt.n_init == 3);
  REQUIRE(s.opt.max_count_per_type == 6);
  REQUIRE(s.opt.seed == 7);
  REQUIRE(s.baseline_alpha == std::vector<int>{2, 1});
  REQUIRE(s.output_dir == "out/scenario_tiny");
  // The link clock follows the interposer unless overridden.
  REQUIRE(s.ctx.link.cycle_s == Catch::Approx(1e-9 / 1.15).epsilon(1e-12));
}

TEST_CASE("scenario defaults fill missing sections") {
  fs::path dir = fresh_dir("cdse_scn_defaults");
  {
    std::ofstream out(dir / "min.json");
    out << R"({"catalog": ")" << TEST_DATA_DIR << R"(/catalog_tiny.json",
               "workloads": [")" << TEST_DATA_DIR << R"(/workloads/wl_synthetic_small.json"]})";
  }
  Scenario s = load_scenario((dir / "min.json").string());
  REQUIRE(s.name == "min");
  REQUIRE(s.ctx.kind == TopologyKind::floret);
  REQUIRE(s.ctx.grid.rows == 10);
  REQUIRE(s.ctx.grid.cols == 10);
  REQUIRE(s.ctx.constraints.t_max_c == 75.0);
  REQUIRE(s.ctx.interposer.material == Interposer::silicon);
  REQUIRE(s.output_dir == "out");
  REQUIRE(s.baseline_alpha.empty());
}

TEST_CASE("scenario validation failures") {
  fs::path dir = fresh_dir("cdse_scn_bad");
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name);
    out << body;
    return (dir / name).string();
  };
  std::string cat = std::string(TEST_DATA_DIR) + "/catalog_tiny.json";
  std::string wl = std::string(TEST_DATA_DIR) + "/workloads/wl_synthetic_small.json";

  REQUIRE_THROWS_AS(load_scenario(write("no_catalog.json",
                                        R"({"workloads": [")" + wl + R"("]})")),
                    ConfigError);
  REQUIRE_THROWS_AS(load_scenario(write("no_wl.json", R"({"catalog": ")" + cat + R"("})")),
                    ConfigError);
  REQUIRE_THROWS_AS(load_scenario(write("bad_grid.json",
                                        R"({"catalog": ")" + cat + R"(", "workloads": [")" + wl +
                                            R"("], "grid": {"rows": 0}})")),
                    ConfigError);
  REQUIRE_THROWS_AS(load_scenario(write("bad_alpha.json",
                                        R"({"catalog": ")" + cat + R"(", "workloads": [")" + wl +
                                            R"("], "baseline_alpha": [1, 2, 3]})")),
                    ConfigError);
  REQUIRE_THROWS_AS(load_scenario(write("not_json.json", "{")), ConfigError);
  REQUIRE_THROWS_AS(load_scenario((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("scenario run writes a reproducible report set") {
  Scenario s = load_scenario(TEST_DATA_DIR "/scenarios/scenario_tiny.json");

  RunOptions opts;
  fs::path dir_a = fresh_dir("cdse_run_a");
  opts.out_dir = dir_a.string();
  CoOptimizeResult res = run_scenario(s, opts);
  REQUIRE(res.incumbent.has_value());
  REQUIRE(fs::exists(dir_a / "pareto.csv"));
  REQUIRE(fs::exists(dir_a / "trace.csv"));
  REQUIRE(fs::exists(dir_a / "summary.json"));
  for (const auto& e : fs::directory_iterator(dir_a))
    REQUIRE(e.path().extension() != ".tmp"); // staging leaves nothing behind

  fs::path dir_b = fresh_dir("cdse_run_b");
  opts.out_dir = dir_b.string();
  run_scenario(s, opts);
  for (const char* f : {"pareto.csv", "trace.csv", "summary.json"})
    REQUIRE(slurp(dir_a / f) == slurp(dir_b / f));

  std::string pareto = slurp(dir_a / "pareto.csv");
  REQUIRE(pareto.rfind("id,alpha,latency_s,energy_j,edp,t_peak_c,max_warpage_um,cost_norm\n", 0) == 0);
  REQUIRE(line_count(pareto) == res.archive.size() + 1);

  std::string trace = slurp(dir_a / "trace.csv");
  REQUIRE(trace.rfind("step,alpha,best_edp,incumbent_edp\n", 0) == 0);
  REQUIRE(line_count(trace) == res.trace.size() + 1);

  nlohmann::ordered_json summary = nlohmann::ordered_json::parse(slurp(dir_a / "summary.json"));
  REQUIRE(summary.at("scenario") == "scenario_tiny");
  REQUIRE(summary.at("version") == kVersion);
  REQUIRE(summary.at("seed") == 7);
  REQUIRE(summary.at("evaluations") == static_cast<int>(res.trace.size()));
  REQUIRE(summary.at("archive_size") == static_cast<int>(res.archive.size()));
  REQUIRE_FALSE(summary.at("incumbent").is_null());
  REQUIRE(summary.at("incumbent").at("evaluation").at("feasible_thermal") == true);
  REQUIRE(summary.at("incumbent_edp").get<double>() == res.incumbent_edp);
  // The echo preserves the input scenario for provenance.
  REQUIRE(summary.at("scenario_echo").at("name") == "scenario_tiny");
  REQUIRE(summary.at("scenario_echo").at("optimizer").at("seed") == 7);
}

TEST_CASE("optional dump files") {
  Scenario s = load_scenario(TEST_DATA_DIR "/scenarios/scenario_tiny.json");
  RunOptions opts;
  fs::path dir = fresh_dir("cdse_run_dumps");
  opts.out_dir = dir.string();
  opts.dump_mapping = true;
  opts.dump_warpage = true;
  opts.dump_thermal = true;
  CoOptimizeResult res = run_scenario(s, opts);
  REQUIRE(res.incumbent.has_value());

  std::string mapping = slurp(dir / "mapping.csv");
  REQUIRE(mapping.rfind("layer,instance,fraction,weight_kb\n", 0) == 0);
  REQUIRE(line_count(mapping) >= 4); // three layers, at least one slice each

  std::string warp = slurp(dir / "warpage.csv");
  REQUIRE(warp.rfind("x_mm,kappa_um\n", 0) == 0);
  REQUIRE(line_count(warp) == 258); // 256 intervals inclusive plus header

  std::string thermal = slurp(dir / "thermal.csv");
  REQUIRE(thermal.rfind("x_mm,y_mm,layer,t_c\n", 0) == 0);
  REQUIRE(line_count(thermal) == 3 * 4 + 1);
}

TEST_CASE("seed override changes the run") {
  Scenario s = load_scenario(TEST_DATA_DIR "/scenarios/scenario_tiny.json");
  RunOptions opts;
  fs::path dir = fresh_dir("cdse_run_seed");
  opts.out_dir = dir.string();
  opts.seed_override = 12345;
  run_scenario(s, opts);
  nlohmann::ordered_json summary = nlohmann::ordered_json::parse(slurp(dir / "summary.json"));
  REQUIRE(summary.at("seed") == 12345);
}

TEST_CASE("evaluation serialization uses null for unchecked thermal") {
  Evaluation e;
  e.latency_s = 1.5;
  nlohmann::ordered_json j = evaluation_to_json(e);
  REQUIRE(j.at("t_peak_c").is_null());
  REQUIRE(j.at("feasible_thermal") == true);
  e.t_peak_c = 50.0;
  e.feasible_thermal = true;
  j = evaluation_to_json(e);
  REQUIRE(j.at("t_peak_c").get<double>() == 50.0);
  REQUIRE(j.at("latency_s").get<double>() == 1.5);
}
