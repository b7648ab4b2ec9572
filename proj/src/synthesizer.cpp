#include "eclab/synthesizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "eclab/errors.hpp"
#include "eclab/holo_ops.hpp"
#include "eclab/log.hpp"

namespace eclab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

std::string num(double x) { return nlohmann::json(x).dump(); }

double arg_2pi(cplx z) {
  double a = std::arg(z);
  return a < 0 ? a + kTwoPi : a;
}

std::uint64_t get_u64(const nlohmann::json& v, const std::string& k) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("'" + k + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

double get_num(const nlohmann::json& v, const std::string& k) {
  if (!v.is_number()) throw ConfigError("'" + k + "' must be a number");
  return v.get<double>();
}

int get_int(const nlohmann::json& v, const std::string& k) {
  if (!v.is_number_integer()) throw ConfigError("'" + k + "' must be an integer");
  return v.get<int>();
}

// lattice points gamma with |base + gamma - w0| <= radius
std::vector<cplx> lattice_targets(const Lattice& lat, cplx base, cplx w0, double radius) {
  const cplx w1 = lat.omega1(), w2 = lat.omega2();
  const double area = lat.cell_area();
  double s, t;
  lat.coordinates(w0 - base, s, t);
  const double bs = radius * std::abs(w2) / area + 1.0, bt = radius * std::abs(w1) / area + 1.0;
  std::vector<cplx> out;
  if (bs * bt > 1e6) return out;
  for (long a = static_cast<long>(std::floor(s - bs)); a <= static_cast<long>(std::ceil(s + bs)); ++a)
    for (long b = static_cast<long>(std::floor(t - bt)); b <= static_cast<long>(std::ceil(t + bt)); ++b) {
      cplx w = base + static_cast<double>(a) * w1 + static_cast<double>(b) * w2;
      if (std::abs(w - w0) <= radius) out.push_back(w);
    }
  return out;
}

}  // namespace

double Schedule::value(int l) const {
  if (!values.empty()) {
    if (l < 1 || l > static_cast<int>(values.size())) throw ConfigError("schedule has no entry for this step");
    return values[l - 1];
  }
  return scale * std::pow(base, l);
}

nlohmann::json Schedule::to_json() const {
  if (!values.empty()) return values;
  return {{"scale", scale}, {"base", base}};
}

Schedule Schedule::from_json(const nlohmann::json& j, const char* what) {
  Schedule s;
  if (j.is_array()) {
    for (const auto& v : j) s.values.push_back(get_num(v, what));
    if (s.values.empty()) throw ConfigError(std::string(what) + " schedule is empty");
    return s;
  }
  if (!j.is_object()) throw ConfigError(std::string(what) + " schedule must be a list or {scale, base}");
  for (const auto& [k, v] : j.items()) {
    if (k == "scale")
      s.scale = get_num(v, k);
    else if (k == "base")
      s.base = get_num(v, k);
    else
      throw ConfigError("unknown key '" + k + "' in " + what + " schedule");
  }
  return s;
}

void SynthConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (!(divisor >= 3.0)) throw ConfigError("divisor must be >= 3");
  if (!(R0 > 0.0)) throw ConfigError("R0 must be positive");
  if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  if (M_start < 1 || M_cap < M_start) throw ConfigError("need 1 <= M_start <= M_cap");
  if (probes < 0 || probe_degree < 0) throw ConfigError("probe counts must be >= 0");
  if (cap_mode != "lipschitz" && cap_mode != "schedule") throw ConfigError("cap_mode must be lipschitz or schedule");
  if (!(cap_factor > 0.0 && cap_factor < 1.0)) throw ConfigError("cap_factor must lie in (0, 1)");
  if (!(anchor_growth > 0.0) || !(anchor_tame > 0.0)) throw ConfigError("anchor parameters must be positive");
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("margin must lie in (0, 1)");
  if (probe_floor_log2 > -1 || probe_floor_log2 < -1000) throw ConfigError("probe_floor_log2 out of range");
  for (int l = 1; l <= steps; ++l) {
    double t = tau.value(l);
    if (!(t > 0.0)) throw ConfigError("thresholds must be positive");
    if (l > 1 && !(t < tau.value(l - 1))) throw ConfigError("thresholds must be strictly decreasing");
    if (!(tube_rho.value(l) > 0.0)) throw ConfigError("tube radii must be positive");
    if (cap_mode == "schedule" && !(cap_schedule.value(l) > 0.0)) throw ConfigError("cap radii must be positive");
  }
  if (!seed_map.g1.is_nonconstant(0.5 * R0) || !seed_map.g2.is_nonconstant(0.5 * R0))
    throw ConfigError("seed map must be nonconstant in both coordinates");
  if (!(2.0 * R0 < seed_map.validity_radius())) throw ConfigError("seed map must be valid on D(0, 2 R0)");
  quad.validate();
}

nlohmann::json SynthConfig::to_json() const {
  return {{"target", target.to_json()},
          {"steps", steps},
          {"seed", seed},
          {"seed_map", seed_map.to_json()},
          {"R0", R0},
          {"eps0", eps0},
          {"tau", tau.to_json()},
          {"tube_rho", tube_rho.to_json()},
          {"cap_mode", cap_mode},
          {"cap_factor", cap_factor},
          {"cap_schedule", cap_schedule.to_json()},
          {"divisor", divisor},
          {"M_start", M_start},
          {"M_cap", M_cap},
          {"quad", quad.to_json()},
          {"anchor_growth", anchor_growth},
          {"anchor_tame", anchor_tame},
          {"margin", margin},
          {"probes", probes},
          {"probe_degree", probe_degree},
          {"probe_floor_log2", probe_floor_log2}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synthesizer config must be an object");
  SynthConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "target")
      c.target = ProductTarget::from_json(v);
    else if (k == "steps")
      c.steps = get_int(v, k);
    else if (k == "seed")
      c.seed = get_u64(v, k);
    else if (k == "seed_map")
      c.seed_map = HoloPair::from_json(v);
    else if (k == "R0")
      c.R0 = get_num(v, k);
    else if (k == "eps0")
      c.eps0 = get_num(v, k);
    else if (k == "tau")
      c.tau = Schedule::from_json(v, "tau");
    else if (k == "tube_rho")
      c.tube_rho = Schedule::from_json(v, "tube_rho");
    else if (k == "cap_mode") {
      if (!v.is_string()) throw ConfigError("cap_mode must be a string");
      c.cap_mode = v.get<std::string>();
    } else if (k == "cap_factor")
      c.cap_factor = get_num(v, k);
    else if (k == "cap_schedule")
      c.cap_schedule = Schedule::from_json(v, "cap_schedule");
    else if (k == "divisor")
      c.divisor = get_num(v, k);
    else if (k == "M_start")
      c.M_start = get_u64(v, k);
    else if (k == "M_cap")
      c.M_cap = get_u64(v, k);
    else if (k == "quad")
      c.quad = QuadSpec::from_json(v);
    else if (k == "anchor_growth")
      c.anchor_growth = get_num(v, k);
    else if (k == "anchor_tame")
      c.anchor_tame = get_num(v, k);
    else if (k == "margin")
      c.margin = get_num(v, k);
    else if (k == "probes")
      c.probes = get_int(v, k);
    else if (k == "probe_degree")
      c.probe_degree = get_int(v, k);
    else if (k == "probe_floor_log2")
      c.probe_floor_log2 = get_int(v, k);
    else
      throw ConfigError("unknown synthesizer key '" + k + "'");
  }
  c.validate();
  return c;
}

HoloFunc Coordinate::func() const {
  if (twists.empty()) return base;
  std::vector<HoloFunc> f{base};
  for (const auto& t : twists) f.push_back(HoloFunc::constant(1.0) + t);
  return HoloFunc::product(f);
}

double EpsilonLedger::drift_bound(int l) const {
  double s = 0.0;
  // eps[j] for j >= l, excluding the last entry which no later step consumed
  for (std::size_t j = static_cast<std::size_t>(l); j + 1 < eps.size(); ++j) s += 3.0 * eps[j] / divisor;
  return s;
}

bool EpsilonLedger::chain_ok() const {
  for (std::size_t l = 1; l < eps.size(); ++l)
    if (!(eps[l] > 0.0 && eps[l] < 0.5 * eps[l - 1])) return false;
  return true;
}

nlohmann::json EpsilonLedger::to_json() const {
  nlohmann::json bounds = nlohmann::json::array();
  for (std::size_t l = 0; l < eps.size(); ++l) bounds.push_back(drift_bound(static_cast<int>(l)));
  return {{"divisor", divisor}, {"eps", eps}, {"drift_bound", bounds}, {"chain_ok", chain_ok()}};
}

nlohmann::json SweepRow::to_json() const {
  return {{"M", M},
          {"report", rep.to_json()},
          {"drift", xreal_to_json(drift)},
          {"drift_ok", drift_ok},
          {"audit_lower", xreal_to_json(audit_lower)},
          {"audit_ok", audit_ok},
          {"pass", pass}};
}

nlohmann::json ProbeResult::to_json() const {
  return {{"pass", pass},
          {"probes_run", run},
          {"worst_L_over_T", worst[0]},
          {"worst_boundary_over_area", worst[1]},
          {"worst_masked_T_over_T", worst[2]},
          {"worst_masked_area_over_area", worst[3]}};
}

StepState step0(const SynthConfig& cfg) {
  if (!cfg.seed_map.g1.is_nonconstant(0.5 * cfg.R0) || !cfg.seed_map.g2.is_nonconstant(0.5 * cfg.R0))
    throw ConfigError("seed map must be nonconstant in both coordinates");
  StepState s;
  s.ell = 0;
  s.coords[0].base = cfg.seed_map.g1;
  s.coords[1].base = cfg.seed_map.g2;
  s.R = cfg.R0;
  s.eps = cfg.eps0;
  s.record = {{"ell", 0}, {"R", s.R}, {"eps", s.eps}, {"F", cfg.seed_map.to_json()}};
  return s;
}

Runge runge_step(const StepState& s, const SynthConfig& cfg) {
  if (!(s.eps > 0.0)) throw ParameterError("runge_step needs eps > 0");
  (void)cfg;
  // every coordinate is already an entire polynomial expression: pass through
  HoloPair G = s.map();
  if (!G.g1.is_nonconstant(0.5 * s.R) || !G.g2.is_nonconstant(0.5 * s.R))
    throw DegenerateMapError("coordinate became constant");
  return {G, 0.0};
}

Anchor find_anchor(const HoloFunc& Gi, const TorusPoint& e_point, double R_prev, const SynthConfig& cfg) {
  if (!Gi.is_nonconstant(0.5)) throw ParameterError("anchor coordinate is constant");
  const double r_min = R_prev + 1.0;
  const double r_max = r_min + cfg.anchor_growth * r_min;
  const Lattice& lat = e_point.lattice;
  const cplx base = e_point.rep;
  PreimageOptions opt;
  const double tame = cfg.anchor_tame;
  opt.accept_tile = [&Gi, tame](cplx lo, cplx hi) {
    EvalCache cache;
    for (int a = 0; a <= 2; ++a)
      for (int b = 0; b <= 2; ++b) {
        cplx z(lo.real() + 0.5 * a * (hi.real() - lo.real()), lo.imag() + 0.5 * b * (hi.imag() - lo.imag()));
        cache.clear();
        Jet j = Gi.jet(z, cache);
        if (!(j.d.abs() <= XReal(tame))) return false;
      }
    return true;
  };
  Preimage p = find_preimage(
      Gi, [&](cplx w0, double radius) { return lattice_targets(lat, base, w0, radius); }, r_min, r_max, opt);
  Anchor a{p.z, std::abs(p.z), Gi(p.z), p.residual};
  if (!(a.R > r_min)) throw NotFoundError("anchor does not clear R_prev + 1");
  if (torus_dist_to(e_point, a.lift) > 1e-8) throw NotFoundError("anchor misses the e-point");
  return a;
}

namespace {

Coordinate twisted(const Coordinate& c, const HoloFunc& XM) {
  Coordinate out = c;
  out.twists.push_back(XM);
  return out;
}

HoloPair with_coord(const StepState& s, int j, const Coordinate& c) {
  HoloPair P = s.map();
  (j == 1 ? P.g1 : P.g2) = c.func();
  return P;
}

bool ratios_below(const CurrentReport& r, double t) {
  return r.L_over_T <= t && r.boundary_over_area <= t && r.masked_T_over_T < t && r.masked_area_over_area < t;
}

}  // namespace

Sweep select_M(const StepState& prev, const StepContext& ctx, const PeakingFunction& peak, const WitnessDisc& witness,
               const TubeNbhd& tube, const SynthConfig& cfg) {
  const int j = ctx.anchor_factor == 1 ? 2 : 1;
  const Coordinate& cj = prev.coords[j - 1];
  const HoloFunc Gj = cj.func();
  const HoloFunc X = peak.func();
  const double drift_cap = 3.0 * ctx.eps_prev / cfg.divisor;
  const double vr = ctx.R_prev + cfg.margin;
  const double audit_log = std::log(ctx.R / (std::abs(witness.c) + witness.r));
  Sweep sw;
  for (std::uint64_t M = cfg.M_start;; M *= 2) {
    HoloFunc XM = HoloFunc::power(X, M);
    // sampled sup of the coordinate change on the boundary of V'
    XReal drift;
    EvalCache c1, c2;
    for (int k = 0; k < 4096; ++k) {
      cplx z = std::polar(vr, kTwoPi * k / 4096.0);
      c1.clear();
      c2.clear();
      drift = max(drift, (Gj.eval_x(z, c1) * XM.eval_x(z, c2)).abs());
    }
    HoloPair cand = with_coord(prev, j, twisted(cj, XM));
    MapDisc md(cand, ctx.R, cfg.target, ctx.hot_angles);
    SweepRow row;
    row.M = M;
    row.rep = report(md, tube, cfg.quad);
    row.drift = drift;
    row.drift_ok = drift <= XReal(drift_cap);
    row.audit_lower = disc_area(cand, witness.c, witness.r) * XReal(audit_log);
    row.audit_ok = row.audit_lower <= row.rep.T;
    row.pass = row.drift_ok && row.audit_ok && ratios_below(row.rep, ctx.tau);
    sw.rows.push_back(row);
    if (log_enabled())
      log_line("step " + std::to_string(ctx.ell) + " M=" + std::to_string(M) + " L/T=" + num(row.rep.L_over_T) +
               " b/A=" + num(row.rep.boundary_over_area) + " mT=" + num(row.rep.masked_T_over_T) +
               " mA=" + num(row.rep.masked_area_over_area) + (row.drift_ok ? "" : " drift>cap") +
               (row.pass ? " accepted" : ""));
    if (row.pass) {
      sw.accepted = sw.rows.size() - 1;
      break;
    }
    if (M > cfg.M_cap / 2) break;
  }
  return sw;
}

ProbeResult stability_probe(const StepState& s, const StepContext& ctx, const TubeNbhd& tube, double eps_candidate,
                            const SynthConfig& cfg) {
  ProbeResult res;
  const TubeNbhd wide = tube.doubled();
  const double t2 = 2.0 * ctx.tau;
  const double vr = ctx.R_prev + cfg.margin;
  auto check = [&](const HoloPair& F) {
    CurrentReport r = report(MapDisc(F, ctx.R, cfg.target, ctx.hot_angles), wide, cfg.quad);
    double v[4] = {r.L_over_T, r.boundary_over_area, r.masked_T_over_T, r.masked_area_over_area};
    for (int k = 0; k < 4; ++k) res.worst[k] = std::max(res.worst[k], v[k]);
    ++res.run;
    return r.L_over_T <= t2 && r.boundary_over_area <= t2 && r.masked_T_over_T < t2 && r.masked_area_over_area < t2;
  };
  const HoloPair F = s.map();
  if (eps_candidate <= 0.0) {
    res.pass = check(F);
    return res;
  }
  std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(ctx.ell));
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<int> deg(0, cfg.probe_degree);
  for (int p = 0; p < cfg.probes; ++p) {
    HoloFunc P[2];
    for (auto& q : P) {
      int d = deg(rng);
      std::vector<cplx> c(d + 1);
      for (auto& x : c) x = cplx(coef(rng), coef(rng));
      HoloFunc raw = HoloFunc::poly(c, 1.0 / vr, 0.0);
      double sup = sup_modulus(raw, DiscDomain(0.0, vr), 1024).hi();
      // pair norm <= eps: each coordinate at most eps / sqrt(2)
      q = sup > 0.0 ? HoloFunc::scaled(eps_candidate * M_SQRT1_2 / sup, raw) : raw;
    }
    HoloPair Fp{F.g1 + P[0], F.g2 + P[1]};
    if (!check(Fp)) {
      res.pass = false;
      return res;
    }
  }
  return res;
}

std::vector<double> final_drift(const std::vector<StepState>& trace, int samples) {
  std::vector<double> out;
  if (trace.empty()) return out;
  const StepState& last = trace.back();
  for (const StepState& s : trace) {
    XReal worst;
    EvalCache cache;
    for (int k = 0; k < samples; ++k) {
      cplx z = std::polar(s.R, kTwoPi * k / samples);
      XReal norm2;
      for (int c = 0; c < 2; ++c) {
        const auto& later = last.coords[c].twists;
        std::size_t from = s.coords[c].twists.size();
        if (from >= later.size()) continue;
        // prod (1 + X_k) - 1 accumulated without cancellation
        XComplex P(0.0);
        for (std::size_t t = from; t < later.size(); ++t) {
          cache.clear();
          XComplex X = later[t].eval_x(z, cache);
          P = P + X + P * X;
        }
        cache.clear();
        XComplex d = s.coords[c].func().eval_x(z, cache) * P;
        norm2 += d.norm();
      }
      worst = max(worst, norm2.sqrt());
    }
    out.push_back(worst.to_double());
  }
  return out;
}

SynthOutcome run(const SynthConfig& cfg) {
  cfg.validate();
  SynthOutcome out;
  out.ledger.divisor = cfg.divisor;
  out.ledger.eps.push_back(cfg.eps0);
  try {
    out.trace.push_back(step0(cfg));
    for (int l = 1; l <= cfg.steps; ++l) {
      const StepState& prev = out.trace.back();
      StepContext ctx;
      ctx.ell = l;
      ctx.anchor_factor = (l % 2 == 1) ? 1 : 2;
      const int i = ctx.anchor_factor, j = 3 - i;
      ctx.R_prev = prev.R;
      ctx.eps_prev = prev.eps;
      ctx.tau = cfg.tau.value(l);
      nlohmann::json rec = {{"ell", l}, {"anchor_factor", i}, {"twist_factor", j}, {"tau", ctx.tau}};
      log_line("step " + std::to_string(l) + " start, R_prev=" + num(prev.R));

      Runge rg = runge_step(prev, cfg);
      rec["runge_error"] = rg.error;
      const HoloFunc& Gi = i == 1 ? rg.G.g1 : rg.G.g2;
      const HoloFunc& Gj = j == 1 ? rg.G.g1 : rg.G.g2;
      const Lattice& lat = cfg.target.factor(i);
      const std::uint64_t k = static_cast<std::uint64_t>((l + 1) / 2);
      TorusPoint e = dense_sequence(lat, k);
      rec["e_point"] = e.to_json();
      rec["e_index"] = k;

      Anchor a = find_anchor(Gi, e, prev.R, cfg);
      ctx.R = a.R;
      const double theta = arg_2pi(a.z);
      rec["anchor"] = {{"z", complex_to_json(a.z)},
                       {"R", a.R},
                       {"lift", complex_to_json(a.lift)},
                       {"residual", a.residual},
                       {"torus_dist", torus_dist_to(e, a.lift)}};
      ctx.hot_angles = prev.hot_angles;
      ctx.hot_angles.push_back(theta);

      const double rho = cfg.tube_rho.value(l);
      TubeNbhd tube(i, reduce(lat, a.lift), rho);
      rec["tube"] = tube.to_json();
      rec["tube_embedded"] = tube.embedded();

      double cap;
      if (cfg.cap_mode == "lipschitz") {
        double lip = sup_modulus(Gi.derivative(), DiscDomain(a.z, rho), 1024).hi();
        rec["lipschitz"] = lip;
        cap = std::min(cfg.cap_factor * rho / std::max(1.0, lip), 0.24 * a.R);
      } else {
        cap = cfg.cap_schedule.value(l);
      }
      PeakingFunction peak = make_peaking(a.R, theta, cap);
      rec["cap_radius"] = cap;
      rec["peak"] = peak.to_json();
      const double m = peak.sup_on_disc();
      rec["m"] = m;
      WitnessDisc w = witness_disc(peak, Gj, a.R, m);
      rec["witness"] = w.to_json();

      rec["report_before"] = report(MapDisc(rg.G, a.R, cfg.target, ctx.hot_angles), tube, cfg.quad).to_json();

      Sweep sw = select_M(prev, ctx, peak, w, tube, cfg);
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : sw.rows) {
        rows.push_back(r.to_json());
        std::ostringstream os;
        os << l << ',' << r.M << ',' << xreal_to_json(r.rep.T).dump() << ',' << num(r.rep.L_over_T) << ','
           << num(r.rep.boundary_over_area) << ',' << num(r.rep.masked_T_over_T) << ','
           << num(r.rep.masked_area_over_area) << ',' << xreal_to_json(r.drift).dump() << ','
           << xreal_to_json(r.audit_lower).dump() << ',' << (r.audit_ok ? 1 : 0) << ',' << (r.pass ? 1 : 0);
        out.csv_rows.push_back(os.str());
      }
      rec["sweep"] = rows;
      if (!sw.accepted) {
        rec["status"] = "threshold_unmet";
        StepState failed = prev;
        failed.ell = l;
        failed.record = rec;
        out.trace.push_back(failed);
        out.status = RunStatus::threshold_unmet;
        out.message = "step " + std::to_string(l) + ": thresholds unmet up to M = " + std::to_string(sw.rows.back().M);
        break;
      }
      const SweepRow& acc = sw.rows[*sw.accepted];
      rec["M"] = acc.M;
      rec["report"] = acc.rep.to_json();
      rec["audit_lower"] = xreal_to_json(acc.audit_lower);
      rec["drift"] = xreal_to_json(acc.drift);
      rec["drift_cap"] = 3.0 * ctx.eps_prev / cfg.divisor;

      StepState s;
      s.ell = l;
      s.coords = prev.coords;
      s.coords[j - 1] = twisted(prev.coords[j - 1], HoloFunc::power(peak.func(), acc.M));
      s.R = a.R;
      s.z = a.z;
      s.M = acc.M;
      s.hot_angles = ctx.hot_angles;

      // largest passing budget on the ladder eps_{l-1} 2^-n, kept strictly
      // below eps_{l-1} / 2
      nlohmann::json ladder = nlohmann::json::array();
      std::optional<double> chosen;
      for (int n = 1; n <= -cfg.probe_floor_log2; ++n) {
        double cand = std::ldexp(ctx.eps_prev, -n) * (1.0 - std::ldexp(1.0, -20));
        ProbeResult pr = stability_probe(s, ctx, tube, cand, cfg);
        log_line("step " + std::to_string(l) + " probes at eps=" + num(cand) + (pr.pass ? " pass" : " fail"));
        nlohmann::json pj = pr.to_json();
        pj["eps"] = cand;
        ladder.push_back(pj);
        if (pr.pass) {
          chosen = cand;
          break;
        }
      }
      rec["probe_ladder"] = ladder;
      if (!chosen) {
        rec["status"] = "threshold_unmet";
        s.record = rec;
        out.trace.push_back(s);
        out.status = RunStatus::threshold_unmet;
        out.message = "step " + std::to_string(l) + ": stability probes failed down to the ladder floor";
        break;
      }
      s.eps = *chosen;
      out.ledger.eps.push_back(s.eps);
      rec["eps"] = s.eps;
      rec["status"] = "ok";
      rec["F"] = s.map().to_json();
      s.record = rec;
      out.trace.push_back(s);
    }
  } catch (const Error& e) {
    out.status = RunStatus::error;
    out.message = e.what();
  }
  if (out.status == RunStatus::ok && !out.ledger.chain_ok()) {
    out.status = RunStatus::error;
    out.message = "epsilon chain violated";
  }
  if (out.status == RunStatus::ok) {
    std::vector<double> drift = final_drift(out.trace);
    for (std::size_t l = 0; l < drift.size(); ++l) {
      double bound = out.ledger.drift_bound(static_cast<int>(l));
      out.trace[l].record["final_drift"] = drift[l];
      out.trace[l].record["final_drift_bound"] = bound;
      if (!(drift[l] <= bound)) {
        out.status = RunStatus::error;
        out.message = "final drift exceeds the ledger bound at step " + std::to_string(l);
      }
    }
  }
  return out;
}

nlohmann::json SynthOutcome::trace_json() const {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace) steps.push_back(s.record);
  const char* st = status == RunStatus::ok ? "ok" : status == RunStatus::threshold_unmet ? "threshold_unmet" : "error";
  return {{"status", st}, {"message", message}, {"steps", steps}, {"ledger", ledger.to_json()}};
}

std::string SynthOutcome::ratios_csv() const {
  std::string s =
      "ell,M,T,L_over_T,boundary_over_area,masked_T_over_T,masked_area_over_area,drift,audit_lower,audit_ok,pass\n";
  for (const auto& r : csv_rows) s += r + "\n";
  return s;
}

std::string SynthOutcome::summary() const {
  std::ostringstream os;
  nlohmann::json t = trace_json();
  os << "status: " << t["status"].get<std::string>() << "\n";
  if (!message.empty()) os << "message: " << message << "\n";
  for (const auto& r : t["steps"]) {
    os << "step " << r["ell"].dump();
    if (r.contains("R")) os << "  R = " << r["R"].dump();
    if (r.contains("anchor")) os << "  R = " << r["anchor"]["R"].dump();
    if (r.contains("M")) os << "  M = " << r["M"].dump();
    if (r.contains("eps")) os << "  eps = " << r["eps"].dump();
    os << "\n";
    if (r.contains("report")) {
      const auto& rep = r["report"];
      os << "  L/T = " << rep["L_over_T"].dump() << "  boundary/area = " << rep["boundary_over_area"].dump()
         << "  masked_T/T = " << rep["masked_T_over_T"].dump()
         << "  masked_area/area = " << rep["masked_area_over_area"].dump() << "  tau = " << r["tau"].dump() << "\n";
      os << "  T = " << rep["T"].dump() << "  audit lower bound = " << r["audit_lower"].dump() << "\n";
    }
    if (r.contains("final_drift"))
      os << "  final drift = " << r["final_drift"].dump() << "  bound = " << r["final_drift_bound"].dump() << "\n";
  }
  return os.str();
}

}  // namespace eclab
