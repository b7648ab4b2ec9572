#include "eclab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "eclab/currents.hpp"
#include "eclab/errors.hpp"
#include "eclab/oka_patcher.hpp"
#include "eclab/peaking.hpp"
#include "eclab/synthesizer.hpp"

namespace eclab::cli {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << text;
  if (!f) throw ConfigError("write failed for " + p.string());
}

std::filesystem::path out_dir(const Options& opt) {
  std::filesystem::path d(opt.out);
  std::error_code ec;
  std::filesystem::create_directories(d, ec);
  if (ec) throw ConfigError("cannot create output directory " + d.string() + ": " + ec.message());
  return d;
}

std::string dump(const nlohmann::json& j) { return j.dump(1) + "\n"; }

// Measure config: a map, a radius, optional target, tube and quadrature.
struct MeasureConfig {
  HoloPair map;
  double R = 1.0;
  ProductTarget target;
  std::optional<TubeNbhd> tube;
  QuadSpec quad;
  std::vector<double> hot_angles;

  static MeasureConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("measure config must be an object");
    MeasureConfig c;
    bool have_map = false;
    nlohmann::json tube;
    for (const auto& [k, v] : j.items()) {
      if (k == "map") {
        c.map = HoloPair::from_json(v);
        have_map = true;
      } else if (k == "R") {
        if (!v.is_number()) throw ConfigError("R must be a number");
        c.R = v.get<double>();
      } else if (k == "target") {
        c.target = ProductTarget::from_json(v);
      } else if (k == "tube") {
        tube = v;
      } else if (k == "quad") {
        c.quad = QuadSpec::from_json(v);
      } else if (k == "hot_angles") {
        if (!v.is_array()) throw ConfigError("hot_angles must be a list");
        for (const auto& a : v) {
          if (!a.is_number()) throw ConfigError("hot_angles entries must be numbers");
          c.hot_angles.push_back(a.get<double>());
        }
      } else {
        throw ConfigError("unknown measure key '" + k + "'");
      }
    }
    if (!have_map) throw ConfigError("measure config needs 'map'");
    if (!(c.R > 0.0)) throw ConfigError("R must be positive");
    if (!tube.is_null()) {
      if (!tube.is_object()) throw ConfigError("tube must be {factor, center, rho}");
      int factor = 1;
      cplx center = 0.0;
      double rho = 0.5;
      for (const auto& [k, v] : tube.items()) {
        if (k == "factor" && v.is_number_integer())
          factor = v.get<int>();
        else if (k == "center")
          center = complex_from_json(v);
        else if (k == "rho" && v.is_number())
          rho = v.get<double>();
        else
          throw ConfigError("bad tube key '" + k + "'");
      }
      if (factor != 1 && factor != 2) throw ConfigError("tube factor must be 1 or 2");
      if (!(rho > 0.0)) throw ConfigError("tube rho must be positive");
      c.tube.emplace(factor, reduce(c.target.factor(factor), center), rho);
    }
    c.quad.validate();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"map", map.to_json()}, {"R", R}, {"target", target.to_json()}, {"quad", quad.to_json()}};
    if (tube) j["tube"] = tube->to_json();
    if (!hot_angles.empty()) j["hot_angles"] = hot_angles;
    return j;
  }
};

// Peek config: the peaking function from its cap (or delta1) and a list of M.
struct PeekConfig {
  double R = 1.0;
  double theta0 = 0.0;
  std::optional<double> cap;
  std::optional<double> delta1;
  std::vector<std::uint64_t> M{1, 50, 500};
  int scan = 1000;  // polar scan of the closed disc, scan x scan points

  static PeekConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("peek config must be an object");
    PeekConfig c;
    for (const auto& [k, v] : j.items()) {
      if (k == "M") {
        if (!v.is_array() || v.empty()) throw ConfigError("M must be a nonempty list");
        c.M.clear();
        for (const auto& m : v) {
          if (!m.is_number_unsigned() || m.get<std::uint64_t>() == 0) throw ConfigError("M entries must be >= 1");
          c.M.push_back(m.get<std::uint64_t>());
        }
      } else if (k == "scan") {
        if (!v.is_number_integer() || v.get<int>() < 16) throw ConfigError("scan must be an integer >= 16");
        c.scan = v.get<int>();
      } else if (k == "R" || k == "theta0" || k == "cap" || k == "delta1") {
        if (!v.is_number()) throw ConfigError("'" + k + "' must be a number");
        double x = v.get<double>();
        if (k == "R")
          c.R = x;
        else if (k == "theta0")
          c.theta0 = x;
        else if (k == "cap")
          c.cap = x;
        else
          c.delta1 = x;
      } else {
        throw ConfigError("unknown peek key '" + k + "'");
      }
    }
    if (c.cap && c.delta1) throw ConfigError("give either cap or delta1, not both");
    if (!c.cap && !c.delta1) c.cap = 0.2 * c.R;
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"R", R}, {"theta0", theta0}, {"M", M}, {"scan", scan}};
    if (cap) j["cap"] = *cap;
    if (delta1) j["delta1"] = *delta1;
    return j;
  }
};

nlohmann::json* walk(nlohmann::json& j, const std::string& dotted, std::string& last) {
  nlohmann::json* cur = &j;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted.find('.', start);
    std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("empty key in override '" + dotted + "'");
    if (dot == std::string::npos) {
      last = key;
      return cur;
    }
    if (!cur->is_object()) throw ConfigError("override path '" + dotted + "' runs through a non-object");
    cur = &(*cur)[key];
    if (cur->is_null()) *cur = nlohmann::json::object();
    start = dot + 1;
  }
}

}  // namespace

nlohmann::json load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
}

void apply_override(nlohmann::json& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must be KEY=VALUE, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  if (!cfg.is_object()) throw ConfigError("config must be an object to take overrides");
  std::string last;
  nlohmann::json* parent = walk(cfg, key, last);
  if (!parent->is_object()) throw ConfigError("override path '" + key + "' runs through a non-object");
  (*parent)[last] = value;
}

void parse_grid(const std::string& text, int& radial, int& angular) {
  std::string t = text;
  const std::string times = "\xc3\x97";  // multiplication sign in UTF-8
  for (std::size_t p; (p = t.find(times)) != std::string::npos;) t.replace(p, times.size(), "x");
  const std::size_t x = t.find_first_of("xX");
  if (x == std::string::npos) throw ConfigError("grid must look like RxTHETA, got '" + text + "'");
  try {
    std::size_t used1 = 0, used2 = 0;
    const std::string a = t.substr(0, x), b = t.substr(x + 1);
    radial = std::stoi(a, &used1);
    angular = std::stoi(b, &used2);
    if (used1 != a.size() || used2 != b.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw ConfigError("grid must look like RxTHETA, got '" + text + "'");
  }
  if (radial <= 0 || angular <= 0) throw ConfigError("grid sizes must be positive");
}

nlohmann::json effective_config(const std::string& command, const Options& opt) {
  nlohmann::json cfg = opt.config.empty() ? nlohmann::json::object() : load_config(opt.config);
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  if (opt.has_seed) {
    if (command != "synthesize") throw ConfigError("--seed only applies to synthesize");
    cfg["seed"] = opt.seed;
  }
  if (!opt.grid.empty()) {
    if (command != "synthesize" && command != "measure") throw ConfigError("--grid applies to synthesize and measure");
    int r = 0, a = 0;
    parse_grid(opt.grid, r, a);
    nlohmann::json& q = cfg["quad"];
    if (q.is_null()) q = nlohmann::json::object();
    q["radial"] = r;
    q["angular"] = a;
  }
  for (const auto& o : opt.overrides) apply_override(cfg, o);
  return cfg;
}

int cmd_synthesize(const Options& opt) {
  const SynthConfig cfg = SynthConfig::from_json(effective_config("synthesize", opt));
  const auto dir = out_dir(opt);
  SynthOutcome out = run(cfg);
  nlohmann::json trace = out.trace_json();
  trace["config"] = cfg.to_json();
  write_file(dir / "trace.json", dump(trace));
  write_file(dir / "ratios.csv", out.ratios_csv());
  write_file(dir / "summary.txt", out.summary());
  std::cout << out.summary();
  if (out.status == RunStatus::ok) return 0;
  return out.status == RunStatus::threshold_unmet ? 2 : 1;
}

int cmd_patch(const Options& opt) {
  const PatchConfig cfg = PatchConfig::from_json(effective_config("patch", opt));
  const auto dir = out_dir(opt);
  PatchOutcome out = run_patch(cfg);
  nlohmann::json trace = out.trace_json();
  trace["config"] = cfg.to_json();
  write_file(dir / "trace.json", dump(trace));
  write_file(dir / "deviations.csv", out.deviations_csv());
  write_file(dir / "summary.txt", out.summary());
  std::cout << out.summary();
  if (out.error) return 1;
  return out.ok ? 0 : 2;
}

int cmd_measure(const Options& opt) {
  const MeasureConfig cfg = MeasureConfig::from_json(effective_config("measure", opt));
  const auto dir = out_dir(opt);
  MapDisc md(cfg.map, cfg.R, cfg.target, cfg.hot_angles);
  CurrentReport rep = report(md, cfg.tube, cfg.quad);
  TPair tp = nevanlinna_T(md, cfg.quad);
  nlohmann::json j = rep.to_json();
  j["T_nested"] = xreal_to_json(tp.nested);
  j["T_log_kernel"] = xreal_to_json(tp.log_kernel);
  j["T_rel_gap"] = tp.rel_gap;
  nlohmann::json trace{{"config", cfg.to_json()}, {"report", j}};
  write_file(dir / "report.json", dump(trace));
  write_file(dir / "report.csv", CurrentReport::csv_header() + "\n" + rep.csv_row() + "\n");
  std::ostringstream os;
  os << "T = " << j["T"].dump() << "  (nested " << j["T_nested"].dump() << ", log kernel "
     << j["T_log_kernel"].dump() << ")\n";
  os << "L = " << j["L"].dump() << "  L/T = " << j["L_over_T"].dump() << "\n";
  os << "area = " << j["ahlfors_area"].dump() << "  boundary = " << j["boundary_length"].dump()
     << "  boundary/area = " << j["boundary_over_area"].dump() << "\n";
  if (rep.has_tube)
    os << "masked_T/T = " << j["masked_T_over_T"].dump() << "  masked_area/area = "
       << j["masked_area_over_area"].dump() << "\n";
  write_file(dir / "summary.txt", os.str());
  std::cout << os.str();
  return 0;
}

int cmd_peek(const Options& opt) {
  const PeekConfig cfg = PeekConfig::from_json(effective_config("peek", opt));
  const auto dir = out_dir(opt);
  const PeakingFunction peak =
      cfg.cap ? make_peaking(cfg.R, cfg.theta0, *cfg.cap) : peaking_from_delta(cfg.R, cfg.theta0, *cfg.delta1);
  const double cap = exceptional_cap_radius(peak);
  const HoloFunc X = peak.func();
  const cplx z0 = peak.z0();
  // polar scan of the closed disc, rim included, cap excluded
  double off_cap_max = 0.0;
  for (int i = 1; i <= cfg.scan; ++i) {
    const double r = cfg.R * i / cfg.scan;
    for (int k = 0; k < cfg.scan; ++k) {
      const cplx z = std::polar(r, cfg.theta0 + kTwoPi * k / cfg.scan);
      if (std::abs(z - z0) < cap) continue;
      off_cap_max = std::max(off_cap_max, std::abs(X(z)));
    }
  }
  off_cap_max = std::max(off_cap_max, std::abs(X(0.0)));
  const bool contained = off_cap_max < 1.0;
  nlohmann::json rows = nlohmann::json::array();
  std::string csv = "M,H_minus_1_at_z0,H_minus_1_off_cap_max\n";
  for (std::uint64_t M : cfg.M) {
    const HoloFunc H = make_H(peak, M);
    const XReal at = (H.eval_x(z0) - XComplex(1.0)).abs();
    const XReal off = XReal(off_cap_max).pow(M);
    nlohmann::json row{{"M", M}, {"H_minus_1_at_z0", xreal_to_json(at)}, {"H_minus_1_off_cap_max", xreal_to_json(off)}};
    csv += row["M"].dump() + "," + row["H_minus_1_at_z0"].dump() + "," + row["H_minus_1_off_cap_max"].dump() + "\n";
    rows.push_back(row);
  }
  nlohmann::json trace{{"config", cfg.to_json()},
                       {"peaking", peak.to_json()},
                       {"X_at_z0", std::abs(X(z0))},
                       {"cap_radius", cap},
                       {"off_cap_max_X", off_cap_max},
                       {"cap_contains_exceptional_set", contained},
                       {"rows", rows}};
  write_file(dir / "peek.json", dump(trace));
  write_file(dir / "peek.csv", csv);
  std::ostringstream os;
  os << "|X(z0)| = " << trace["X_at_z0"].dump() << "  cap radius = " << trace["cap_radius"].dump() << "\n";
  os << "max |X| off the cap = " << trace["off_cap_max_X"].dump()
     << "  contained = " << trace["cap_contains_exceptional_set"].dump() << "\n";
  for (const auto& r : rows)
    os << "M = " << r["M"].dump() << "  |H - 1| at z0 = " << r["H_minus_1_at_z0"].dump()
       << "  max off cap = " << r["H_minus_1_off_cap_max"].dump() << "\n";
  write_file(dir / "summary.txt", os.str());
  std::cout << os.str();
  return contained ? 0 : 2;
}

int main(int argc, char** argv) {
  CLI::App app{"eclab: entire-curve laboratory"};
  app.require_subcommand(1);
  Options opt;
  std::string seed_text;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "JSON config file");
    if (config_required) c->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--override", opt.overrides, "KEY=VALUE with a dotted key and a JSON value");
  };
  auto* syn = app.add_subcommand("synthesize", "run the step-by-step synthesizer");
  add_common(syn, true);
  syn->add_option("--seed", seed_text, "probe seed");
  syn->add_option("--grid", opt.grid, "quadrature grid RxTHETA");
  auto* pat = app.add_subcommand("patch", "run the disc patcher");
  add_common(pat, true);
  auto* mea = app.add_subcommand("measure", "measure the currents of one map disc");
  add_common(mea, true);
  mea->add_option("--grid", opt.grid, "quadrature grid RxTHETA");
  auto* pk = app.add_subcommand("peek", "tabulate a peaking function and its oscillation factors");
  add_common(pk, false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  try {
    if (!seed_text.empty()) {
      std::size_t used = 0;
      opt.seed = std::stoull(seed_text, &used);
      if (used != seed_text.size() || seed_text[0] == '-') throw ConfigError("--seed must be a nonnegative integer");
      opt.has_seed = true;
    }
    if (syn->parsed()) return cmd_synthesize(opt);
    if (pat->parsed()) return cmd_patch(opt);
    if (mea->parsed()) return cmd_measure(opt);
    return cmd_peek(opt);
  } catch (const std::invalid_argument&) {
    std::cerr << "error: --seed must be a nonnegative integer\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace eclab::cli
