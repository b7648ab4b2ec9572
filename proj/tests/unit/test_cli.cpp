#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eclab/cli.hpp"
#include "eclab/errors.hpp"

using namespace eclab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("eclab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const char* exe = std::getenv("ECLAB_CLI");
  REQUIRE(exe != nullptr);
  std::string cmd = std::string(exe) + " " + args + " > /dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const char* kProgram = R"({"program": {"programs": [
  {"map": [{"op": "poly", "coeffs": [[0.3, 0], [1, 0]]}, {"op": "poly", "coeffs": [[0, 0], [0.5, 0]]}], "radius": 0.25},
  {"map": [{"op": "poly", "coeffs": [[0, 1], [0, 0], [1, 0]]}, {"op": "poly", "coeffs": [[1, 0], [-1, 0]]}], "radius": 0.25}
]}, "steps": 3})";

}  // namespace

TEST_CASE("overrides follow dotted paths and parse JSON values") {
  nlohmann::json cfg = {{"steps", 2}, {"quad", {{"radial", 512}}}};
  cli::apply_override(cfg, "steps=4");
  cli::apply_override(cfg, "quad.angular=64");
  cli::apply_override(cfg, "tau.values=[0.5,0.25]");
  cli::apply_override(cfg, "cap_mode=schedule");
  CHECK(cfg["steps"] == 4);
  CHECK(cfg["quad"]["radial"] == 512);
  CHECK(cfg["quad"]["angular"] == 64);
  CHECK(cfg["tau"]["values"][1] == 0.25);
  CHECK(cfg["cap_mode"] == "schedule");
  CHECK_THROWS_AS(cli::apply_override(cfg, "novalue"), ConfigError);
  CHECK_THROWS_AS(cli::apply_override(cfg, "=3"), ConfigError);
  CHECK_THROWS_AS(cli::apply_override(cfg, "steps.x=3"), ConfigError);
}

TEST_CASE("grid flag") {
  int r = 0, a = 0;
  cli::parse_grid("64x128", r, a);
  CHECK(r == 64);
  CHECK(a == 128);
  cli::parse_grid("32\xc3\x97" "256", r, a);
  CHECK(r == 32);
  CHECK(a == 256);
  CHECK_THROWS_AS(cli::parse_grid("64", r, a), ConfigError);
  CHECK_THROWS_AS(cli::parse_grid("64xabc", r, a), ConfigError);
  CHECK_THROWS_AS(cli::parse_grid("0x16", r, a), ConfigError);
}

TEST_CASE("effective config applies seed, grid, then overrides") {
  fs::path d = scratch("eff");
  write(d / "c.json", R"({"steps": 1, "seed": 3})");
  cli::Options o;
  o.config = (d / "c.json").string();
  o.has_seed = true;
  o.seed = 9;
  o.grid = "64x128";
  o.overrides = {"quad.radial=96"};
  nlohmann::json cfg = cli::effective_config("synthesize", o);
  CHECK(cfg["seed"] == 9);
  CHECK(cfg["quad"]["radial"] == 96);
  CHECK(cfg["quad"]["angular"] == 128);
  CHECK_THROWS_AS(cli::effective_config("patch", o), ConfigError);

  write(d / "bad.json", "{\"steps\": ");
  o.config = (d / "bad.json").string();
  CHECK_THROWS_AS(cli::load_config(o.config), ConfigError);
  CHECK_THROWS_AS(cli::load_config((d / "missing.json").string()), ConfigError);
}

TEST_CASE("exit codes") {
  fs::path d = scratch("exit");
  write(d / "bad.json", "{oops");
  write(d / "s0.json", R"({"steps": 0})");
  write(d / "unknown.json", R"({"steps": 0, "colour": 1})");
  CHECK(run_cli("synthesize --config " + (d / "bad.json").string() + " --out " + (d / "o1").string()) == 1);
  CHECK(run_cli("patch --config " + (d / "nope.json").string()) == 1);
  CHECK(run_cli("synthesize --config " + (d / "unknown.json").string() + " --out " + (d / "o2").string()) == 1);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("synthesize --config " + (d / "s0.json").string() + " --out " + (d / "s0").string()) == 0);
  nlohmann::json t = nlohmann::json::parse(slurp(d / "s0" / "trace.json"));
  CHECK(t["status"] == "ok");
  CHECK(t["steps"].size() == 1);
  CHECK(fs::exists(d / "s0" / "ratios.csv"));
  CHECK(fs::exists(d / "s0" / "summary.txt"));
}

TEST_CASE("measure on the identity map") {
  fs::path d = scratch("measure");
  write(d / "m.json",
        R"({"map": [{"op": "poly", "coeffs": [[0, 0], [1, 0]]}, {"op": "poly", "coeffs": [[0, 0]]}], "R": 2})");
  REQUIRE(run_cli("measure --config " + (d / "m.json").string() + " --out " + d.string()) == 0);
  nlohmann::json r = nlohmann::json::parse(slurp(d / "report.json"))["report"];
  const double pi = 3.14159265358979323846;
  CHECK(r["T"].get<double>() == doctest::Approx(2 * pi).epsilon(1e-6));
  CHECK(r["L"].get<double>() == doctest::Approx(4 * pi).epsilon(1e-6));
  CHECK(r["ahlfors_area"].get<double>() == doctest::Approx(4 * pi).epsilon(1e-6));
  CHECK(r["boundary_length"].get<double>() == doctest::Approx(4 * pi).epsilon(1e-6));
  // every figure of the summary is in the JSON
  std::string summary = slurp(d / "summary.txt");
  for (const char* k : {"T", "L", "L_over_T", "ahlfors_area", "boundary_length", "boundary_over_area"})
    CHECK(summary.find(r[k].dump()) != std::string::npos);

  write(d / "const.json",
        R"({"map": [{"op": "poly", "coeffs": [[1, 0]]}, {"op": "poly", "coeffs": [[2, 0]]}], "R": 1})");
  CHECK(run_cli("measure --config " + (d / "const.json").string() + " --out " + (d / "c").string()) == 1);
}

TEST_CASE("peek table") {
  fs::path d = scratch("peek");
  write(d / "p.json", R"({"R": 1, "theta0": 0, "delta1": 0.1, "M": [1, 50], "scan": 200})");
  REQUIRE(run_cli("peek --config " + (d / "p.json").string() + " --out " + d.string()) == 0);
  nlohmann::json t = nlohmann::json::parse(slurp(d / "peek.json"));
  CHECK(t["cap_contains_exceptional_set"] == true);
  CHECK(t["rows"][0]["H_minus_1_at_z0"].get<double>() == doctest::Approx(1.1).epsilon(1e-14));
  CHECK(t["rows"][1]["H_minus_1_at_z0"].get<double>() == doctest::Approx(std::pow(1.1, 50)).epsilon(1e-12));
}

TEST_CASE("patch runs are byte-identical") {
  fs::path d = scratch("patch");
  write(d / "p.json", kProgram);
  REQUIRE(run_cli("patch --config " + (d / "p.json").string() + " --out " + (d / "a").string()) == 0);
  REQUIRE(run_cli("patch --config " + (d / "p.json").string() + " --out " + (d / "b").string()) == 0);
  for (const char* f : {"trace.json", "deviations.csv", "summary.txt"}) CHECK(slurp(d / "a" / f) == slurp(d / "b" / f));
  nlohmann::json t = nlohmann::json::parse(slurp(d / "a" / "trace.json"));
  CHECK(t["status"] == "ok");
  // a zero step count still writes a trace
  CHECK(run_cli("patch --config " + (d / "p.json").string() + " --override steps=0 --out " + (d / "z").string()) ==
        0);
}
