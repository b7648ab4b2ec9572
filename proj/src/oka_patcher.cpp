#include "eclab/oka_patcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "eclab/currents.hpp"
#include "eclab/errors.hpp"
#include "eclab/holo_ops.hpp"
#include "eclab/log.hpp"

namespace eclab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

std::string num(double x) { return nlohmann::json(x).dump(); }

// certified sup on a closed disc; fine sampling for loose polynomials
XReal disc_sup(const HoloFunc& f, cplx c, double r, int samples) {
  XReal a = sup_modulus(f, DiscDomain(c, r, std::max(1.5 * r, r + 1e-9)), samples).upper;
  XReal b = structural_sup(f, DiscDomain(c, r, std::max(1.5 * r, r + 1e-9)), 1024);
  return min(a, b);
}

// A polynomial entire stand-in for g on D(c, r), within tol there.
HoloFunc entire_version(const HoloFunc& g, cplx c, double r, double tol, double& err) {
  err = 0.0;
  if (std::isinf(g.validity_radius())) return g;
  double margin = std::min(0.5 * (r + (g.validity_radius() - std::abs(c))), 2.0 * r);
  if (!(margin > r)) throw DomainError("map not valid beyond its disc");
  Truncation t = taylor_truncate(g, DiscDomain(c, r, margin), tol);
  err = t.error_bound;
  return t.poly.with_validity(std::numeric_limits<double>::infinity());
}

// I_x(p, p) = x^p sum_{i<p} C(p-1+i, i) (1-x)^i, with xbar standing for 1 - x.
// Both factors stay free of cancellation near 0 and near 1.
HoloFunc blend(const HoloFunc& x, const HoloFunc& xbar, int p) {
  HoloFunc q = HoloFunc::constant(1.0);
  double c = 1.0;
  std::vector<double> cs(p);
  for (int i = 0; i < p; ++i) {
    cs[i] = c;
    c = c * (p + i) / (i + 1);
  }
  q = HoloFunc::constant(cs[p - 1]);
  for (int i = p - 2; i >= 0; --i) q = HoloFunc::constant(cs[i]) + xbar * q;
  return HoloFunc::product({HoloFunc::power(x, p), q});
}

// log2 of a^p sum_{i<p} C(p-1+i, i) (1+a)^i, the bound on |I_x(p, p)| when
// |x| <= a and |1 - x| <= 1 + a; la = log2 a
double blend_bound_log2(double la, int p) {
  const double l1a = std::log2(1.0 + std::exp2(la));
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> t(p);
  for (int i = 0; i < p; ++i) {
    t[i] = (std::lgamma(p + i) - std::lgamma(i + 1.0) - std::lgamma(p)) / std::log(2.0) + i * l1a;
    m = std::max(m, t[i]);
  }
  double s = 0.0;
  for (double v : t) s += std::exp2(v - m);
  return p * la + m + std::log2(s);
}

// polynomial close to 0 on the boundary of D(a, R) and to 1 on that of D(c, r)
HoloFunc separating_poly(cplx a, double R, cplx c, double r, int n) {
  // powers of (z - a)/R: by Cauchy every coefficient is at most the boundary
  // sup on the old disc, so evaluation there is stable
  const cplx mid = a;
  const double s = R;
  const int ns = std::max(256, 4 * (n + 1));
  Eigen::MatrixXcd A(2 * ns, n + 1);
  Eigen::VectorXcd b(2 * ns);
  for (int d = 0; d < 2; ++d) {
    const cplx ctr = d == 0 ? a : c;
    const double rad = d == 0 ? R : r;
    for (int k = 0; k < ns; ++k) {
      cplx u = (ctr + std::polar(rad, kTwoPi * (k + 0.5) / ns) - mid) / s;
      cplx p = 1.0;
      for (int col = 0; col <= n; ++col) {
        A(d * ns + k, col) = p;
        p *= u;
      }
      b(d * ns + k) = d == 0 ? 0.0 : 1.0;
    }
  }
  Eigen::VectorXcd x = A.colPivHouseholderQr().solve(b);
  std::vector<cplx> coeffs(x.data(), x.data() + x.size());
  return HoloFunc::poly(coeffs, 1.0 / s, -mid / s);
}

}  // namespace

void DiscProgram::validate() const {
  if (maps.empty()) throw ConfigError("disc program list is empty");
  for (const auto& m : maps) {
    if (!(m.radius > 0.0)) throw ConfigError("program radius must be positive");
    if (!(m.g.validity_radius() > m.radius)) throw ConfigError("program map must be valid beyond its radius");
  }
}

nlohmann::json DiscProgram::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& m : maps) list.push_back({{"map", m.g.to_json()}, {"radius", m.radius}});
  return {{"programs", list}, {"target", target.to_json()}};
}

DiscProgram DiscProgram::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("program must be an object");
  DiscProgram p;
  for (const auto& [k, v] : j.items()) {
    if (k == "target") {
      p.target = ProductTarget::from_json(v);
    } else if (k == "programs") {
      if (!v.is_array()) throw ConfigError("programs must be a list");
      for (const auto& e : v) {
        if (!e.is_object() || !e.contains("map") || !e.contains("radius") || e.size() != 2)
          throw ConfigError("each program needs exactly 'map' and 'radius'");
        if (!e["radius"].is_number()) throw ConfigError("program radius must be a number");
        p.maps.push_back({HoloPair::from_json(e["map"]), e["radius"].get<double>()});
      }
    } else {
      throw ConfigError("unknown program key '" + k + "'");
    }
  }
  p.validate();
  return p;
}

ScheduleEntry schedule(std::uint64_t j, int n_sources) {
  if (j == 0) throw ParameterError("schedule index starts at 1");
  if (n_sources < 1) throw ParameterError("schedule needs at least one source");
  auto pair_of = [](std::uint64_t jj, std::uint64_t& x, std::uint64_t& y) {
    std::uint64_t k = jj - 1;
    auto w = static_cast<std::uint64_t>((std::sqrt(8.0 * static_cast<double>(k) + 1.0) - 1.0) / 2.0);
    while (w * (w + 1) / 2 > k) --w;
    while ((w + 1) * (w + 2) / 2 <= k) ++w;
    y = k - w * (w + 1) / 2;
    x = w - y;
  };
  std::uint64_t x, y;
  pair_of(j, x, y);
  ScheduleEntry e;
  e.phi1 = x + 1;
  e.phi2 = y + 1;
  e.source = static_cast<int>(x % static_cast<std::uint64_t>(n_sources)) + 1;
  e.repetition = 0;
  for (std::uint64_t i = 1; i <= j; ++i) {
    std::uint64_t xi, yi;
    pair_of(i, xi, yi);
    if (static_cast<int>(xi % static_cast<std::uint64_t>(n_sources)) + 1 == e.source) ++e.repetition;
  }
  return e;
}

nlohmann::json MergeResult::to_json() const {
  return {{"unchanged", unchanged},
          {"phi_degree", phi_degree},
          {"K", K},
          {"orders", orders},
          {"phi_on_F", phi_on_F},
          {"one_minus_phi_on_g", phi_on_g},
          {"sup_F_on_g", xreal_to_json(sup_F_on_g)},
          {"sup_g_on_F", xreal_to_json(sup_g_on_F)},
          {"dev_F", dev_F},
          {"dev_g", dev_g},
          {"truncation", truncation}};
}

MergeResult merge_two_discs(const HoloPair& F, cplx a, double R, const HoloPair& g, cplx c, double r, double eps,
                            const MergeOptions& opt) {
  if (!(eps > 0.0)) throw ParameterError("merge needs eps > 0");
  if (!(R > 0.0) || !(r > 0.0)) throw ParameterError("merge radii must be positive");
  if (!(std::abs(c - a) > R + r)) throw ParameterError("merge discs must be disjoint");
  MergeResult res;
  if (F.g1.structurally_equal(g.g1) && F.g2.structurally_equal(g.g2)) {
    res.P = F;
    res.unchanged = true;
    return res;
  }
  // entire stand-ins, a quarter of the budget each
  double e1, e2, e3, e4;
  HoloPair Fe{entire_version(F.g1, a, R, 0.125 * eps, e1), entire_version(F.g2, a, R, 0.125 * eps, e2)};
  HoloPair ge{entire_version(g.g1, c, r, 0.125 * eps, e3), entire_version(g.g2, c, r, 0.125 * eps, e4)};
  const double tF = std::hypot(e1, e2), tg = std::hypot(e3, e4);
  res.truncation = std::max(tF, tg);
  const double budget = eps - res.truncation;

  // separating polynomial, degree doubled until it separates to 1/4
  HoloFunc phi0;
  bool sep = false;
  for (int n = 8; n <= opt.degree_cap; n *= 2) {
    phi0 = separating_poly(a, R, c, r, n);
    double on_F = sup_modulus(phi0, DiscDomain(a, R), opt.samples).hi();
    double on_g = sup_modulus(HoloFunc::constant(1.0) - phi0, DiscDomain(c, r), opt.samples).hi();
    if (on_F <= 0.25 && on_g <= 0.25) {
      res.phi_degree = n;
      res.phi_on_F = on_F;
      res.phi_on_g = on_g;
      sep = true;
      break;
    }
  }
  if (!sep) throw ApproximationFailure("no separating polynomial up to the degree cap");

  // sizes entering the error of the blend
  XReal sF_g, sg_F;
  for (const HoloFunc* f : {&Fe.g1, &Fe.g2}) sF_g += disc_sup(*f, c, r, opt.samples);
  for (const HoloFunc* f : {&ge.g1, &ge.g2}) sg_F += disc_sup(*f, a, R, opt.samples);
  XReal sF_F, sg_g;
  for (const HoloFunc* f : {&Fe.g1, &Fe.g2}) sF_F += disc_sup(*f, a, R, opt.samples);
  for (const HoloFunc* f : {&ge.g1, &ge.g2}) sg_g += disc_sup(*f, c, r, opt.samples);
  res.sup_F_on_g = sF_g;
  res.sup_g_on_F = sg_F;
  const XReal cF = sg_F + sF_F, cg = sF_g + sg_g;

  // Sharpening rounds phi -> I_phi(p, p), the degree 2p - 1 Hermite blend that is
  // flat of order p at 0 and 1. Plans: smoothsteps until the blend of a large
  // order contracts, rounds of that order, one closing round of least order.
  // The plan of least total degree wins.
  const double target = std::log2(budget) - 1.0;
  const double lcF = cF.log2_abs(), lcg = cg.log2_abs();
  bool found = false;
  double best_deg = 0.0;
  double best_la = 0.0, best_lb = 0.0;
  auto close = [&](double la, double lb, double ldeg, const std::vector<int>& orders) {
    for (int pf = 1; pf <= 256; ++pf) {
      const double na = pf == 1 ? la : blend_bound_log2(la, pf);
      const double nb = pf == 1 ? lb : blend_bound_log2(lb, pf);
      if (lcF + na <= target && lcg + nb <= target) {
        const double d = ldeg + std::log2(2.0 * pf - 1.0);
        if (!found || d < best_deg) {
          found = true;
          best_deg = d;
          best_la = na;
          best_lb = nb;
          res.orders = orders;
          if (pf > 1) res.orders.push_back(pf);
        }
        return;
      }
    }
  };
  double la2 = std::log2(res.phi_on_F), lb2 = std::log2(res.phi_on_g), ldeg2 = 0.0;
  std::vector<int> pre;
  for (int k2 = 0; k2 <= opt.K_max; ++k2) {
    if (found && ldeg2 >= best_deg) break;
    for (int p : {3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256}) {
      double la = la2, lb = lb2, ldeg = ldeg2;
      std::vector<int> orders = pre;
      for (int k = k2; k <= opt.K_max; ++k) {
        if (found && ldeg >= best_deg) break;
        close(la, lb, ldeg, orders);
        const double na = blend_bound_log2(la, p), nb = blend_bound_log2(lb, p);
        if (!(na < la && nb < lb)) break;  // this order does not contract yet
        la = na;
        lb = nb;
        ldeg += std::log2(2.0 * p - 1.0);
        orders.push_back(p);
      }
    }
    close(la2, lb2, ldeg2, pre);
    la2 = blend_bound_log2(la2, 2);
    lb2 = blend_bound_log2(lb2, 2);
    ldeg2 += std::log2(3.0);
    pre.push_back(2);
  }
  if (!found) throw ApproximationFailure("no sharpening of the separating polynomial fits the budget");
  res.K = static_cast<int>(res.orders.size());
  HoloFunc phi = phi0, phibar = HoloFunc::constant(1.0) - phi0;
  for (int p : res.orders) {
    HoloFunc next = blend(phi, phibar, p);
    phibar = blend(phibar, phi, p);
    phi = next;
  }
  res.P = {Fe.g1 * phibar + ge.g1 * phi, Fe.g2 * phibar + ge.g2 * phi};
  res.Fe = Fe;
  res.ge = ge;
  res.phi = phi;
  res.phibar = phibar;
  res.dev_F = std::exp2(lcF + best_la) + tF;
  res.dev_g = std::exp2(lcg + best_lb) + tg;
  return res;
}

double sampled_blend_residual(const HoloPair& A, const HoloPair& B, const HoloFunc& w, cplx c, double r,
                              int samples) {
  XReal worst;
  EvalCache cache;
  for (int k = 0; k < samples; ++k) {
    cplx z = c + std::polar(r, kTwoPi * (k + 0.25) / samples);
    cache.clear();
    XComplex wz = w.eval_x(z, cache);
    XComplex d1 = (A.g1.eval_x(z, cache) - B.g1.eval_x(z, cache)) * wz;
    XComplex d2 = (A.g2.eval_x(z, cache) - B.g2.eval_x(z, cache)) * wz;
    worst = max(worst, (d1.norm() + d2.norm()).sqrt());
  }
  return worst.to_double();
}

double sampled_pair_deviation(const HoloPair& P, const HoloPair& Q, cplx c, double r, int samples, cplx shift) {
  XReal worst;
  EvalCache cache;
  for (int k = 0; k < samples; ++k) {
    cplx z = c + std::polar(r, kTwoPi * (k + 0.25) / samples);
    cache.clear();
    XComplex d1 = P.g1.eval_x(z, cache) - Q.g1.eval_x(z - shift, cache);
    cache.clear();
    XComplex d2 = P.g2.eval_x(z, cache) - Q.g2.eval_x(z - shift, cache);
    worst = max(worst, (d1.norm() + d2.norm()).sqrt());
  }
  return worst.to_double();
}

double PatchConfig::eps(int i) const { return eps_scale * std::pow(eps_base, i); }

void PatchConfig::validate() const {
  program.validate();
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (!(eps_scale > 0.0) || !(eps_base > 0.0 && eps_base < 1.0)) throw ConfigError("eps schedule must be summable");
  if (!(slack > 0.0)) throw ConfigError("slack must be positive");
  if (merge.degree_cap < 8 || merge.K_max < 0 || merge.samples < 64) throw ConfigError("merge options out of range");
}

nlohmann::json PatchConfig::to_json() const {
  return {{"program", program.to_json()},
          {"steps", steps},
          {"eps", {{"scale", eps_scale}, {"base", eps_base}}},
          {"slack", slack},
          {"degree_cap", merge.degree_cap},
          {"K_max", merge.K_max},
          {"samples", merge.samples}};
}

PatchConfig PatchConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("patch config must be an object");
  PatchConfig c;
  bool have_program = false;
  for (const auto& [k, v] : j.items()) {
    if (k == "program") {
      c.program = DiscProgram::from_json(v);
      have_program = true;
    } else if (k == "steps") {
      if (!v.is_number_integer()) throw ConfigError("steps must be an integer");
      c.steps = v.get<int>();
    } else if (k == "eps") {
      if (!v.is_object()) throw ConfigError("eps must be {scale, base}");
      for (const auto& [ek, ev] : v.items()) {
        if (!ev.is_number()) throw ConfigError("eps entries must be numbers");
        if (ek == "scale")
          c.eps_scale = ev.get<double>();
        else if (ek == "base")
          c.eps_base = ev.get<double>();
        else
          throw ConfigError("unknown eps key '" + ek + "'");
      }
    } else if (k == "slack") {
      if (!v.is_number()) throw ConfigError("slack must be a number");
      c.slack = v.get<double>();
    } else if (k == "degree_cap" || k == "K_max" || k == "samples") {
      if (!v.is_number_integer()) throw ConfigError("'" + k + "' must be an integer");
      int x = v.get<int>();
      if (k == "degree_cap")
        c.merge.degree_cap = x;
      else if (k == "K_max")
        c.merge.K_max = x;
      else
        c.merge.samples = x;
    } else {
      throw ConfigError("unknown patch key '" + k + "'");
    }
  }
  if (!have_program) throw ConfigError("patch config needs 'program'");
  c.validate();
  return c;
}

PatchOutcome run_patch(const PatchConfig& cfg) {
  cfg.validate();
  PatchOutcome out;
  const int n = static_cast<int>(cfg.program.maps.size());
  try {
    for (int j = 1; j <= cfg.steps; ++j) {
      log_line("patch step " + std::to_string(j));
      PatchStep st;
      st.j = j;
      st.entry = schedule(static_cast<std::uint64_t>(j), n);
      const DiscMap& dm = cfg.program.maps[st.entry.source - 1];
      st.radius = dm.radius;
      st.eps = cfg.eps(j);
      // programs with a finite validity radius are first replaced by a
      // polynomial within eps/8 on their disc, so they can be translated
      double e1, e2;
      HoloPair G{entire_version(dm.g.g1, 0.0, dm.radius, 0.125 * st.eps, e1),
                 entire_version(dm.g.g2, 0.0, dm.radius, 0.125 * st.eps, e2)};
      const double trunc = std::hypot(e1, e2);
      if (j == 1) {
        st.center = 0.0;
        st.ghat = G;
        st.F = G;
        st.merge.P = G;
      } else {
        const PatchStep& prev = out.trace.back();
        st.center = prev.R + 1.0 + dm.radius;
        st.ghat = {G.g1.precompose_affine(1.0, -st.center), G.g2.precompose_affine(1.0, -st.center)};
        st.merge = merge_two_discs(prev.F, 0.0, prev.R, st.ghat, st.center, dm.radius, st.eps - trunc, cfg.merge);
        st.F = st.merge.P;
        // P - F = (ge - Fe) phi + (Fe - F); the last term is the truncation
        if (!st.merge.unchanged)
          st.resampled_F = sampled_blend_residual(st.merge.ge, st.merge.Fe, st.merge.phi, 0.0, prev.R,
                                                  2 * cfg.merge.samples) +
                           st.merge.truncation;
      }
      st.merge.truncation += trunc;
      st.merge.dev_g += trunc;
      st.program = dm.g;
      st.resampled_g = sampled_pair_deviation(st.F, dm.g, st.center, dm.radius, 2 * cfg.merge.samples, st.center);
      st.R = std::abs(st.center) + dm.radius + cfg.slack;
      out.trace.push_back(st);
    }
  } catch (const Error& e) {
    out.ok = false;
    out.error = true;
    out.message = e.what();
    return out;
  }
  // telescoping check on every target disc with the final map
  if (!out.trace.empty()) {
    const HoloPair& Ffin = out.trace.back().F;
    for (std::size_t i = 0; i < out.trace.size(); ++i) {
      PatchStep& st = out.trace[i];
      double b = st.eps;
      for (std::size_t k = i + 1; k < out.trace.size(); ++k) b += out.trace[k].eps;
      st.bound = b;
      st.final_dev = sampled_pair_deviation(Ffin, st.program, st.center, st.radius, cfg.merge.samples, st.center);
      if (!(st.final_dev <= st.bound)) {
        out.ok = false;
        out.message = "telescoping bound violated on disc " + std::to_string(st.j);
      }
      if (!(st.resampled_g <= st.eps) || !(st.resampled_F <= st.eps)) {
        out.ok = false;
        out.message = "merge " + std::to_string(st.j) + " fails the resampling check";
      }
    }
  }
  return out;
}

nlohmann::json PatchOutcome::trace_json() const {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace) {
    steps.push_back({{"j", s.j},
                     {"source", s.entry.source},
                     {"phi", {s.entry.phi1, s.entry.phi2}},
                     {"repetition", s.entry.repetition},
                     {"center", complex_to_json(s.center)},
                     {"radius", s.radius},
                     {"R", s.R},
                     {"eps", s.eps},
                     {"merge", s.merge.to_json()},
                     {"resampled_dev_F", s.resampled_F},
                     {"resampled_dev_g", s.resampled_g},
                     {"final_dev", s.final_dev},
                     {"telescoped_bound", s.bound}});
  }
  return {{"status", error ? "error" : ok ? "ok" : "bound_violated"}, {"message", message}, {"steps", steps}};
}

std::string PatchOutcome::deviations_csv() const {
  std::ostringstream os;
  os << "j,source,center,radius,R,eps,phi_degree,K,dev_F,dev_g,resampled_dev_F,resampled_dev_g,final_dev,"
        "telescoped_bound\n";
  for (const auto& s : trace)
    os << s.j << ',' << s.entry.source << ',' << num(s.center.real()) << ',' << num(s.radius) << ',' << num(s.R)
       << ',' << num(s.eps) << ',' << s.merge.phi_degree << ',' << s.merge.K << ',' << num(s.merge.dev_F) << ','
       << num(s.merge.dev_g) << ',' << num(s.resampled_F) << ',' << num(s.resampled_g) << ',' << num(s.final_dev)
       << ',' << num(s.bound) << '\n';
  return os.str();
}

std::string PatchOutcome::summary() const {
  std::ostringstream os;
  os << "status: " << (error ? "error" : ok ? "ok" : "bound_violated") << "\n";
  if (!message.empty()) os << "message: " << message << "\n";
  for (const auto& s : trace)
    os << "merge " << s.j << "  source " << s.entry.source << "  center " << num(s.center.real()) << "  eps "
       << num(s.eps) << "  final deviation " << num(s.final_dev) << "  bound " << num(s.bound) << "\n";
  return os.str();
}

HoloFunc scale_to_boundary(const HoloFunc& f, int l) {
  if (l < 1) throw ParameterError("scale_to_boundary needs l >= 1");
  return f.precompose_affine(1.0 - std::ldexp(1.0, -l), 0.0);
}

}  // namespace eclab
