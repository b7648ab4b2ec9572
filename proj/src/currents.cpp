#include "eclab/currents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eclab/errors.hpp"
#include "eclab/gauss.hpp"
#include "eclab/parallel.hpp"

namespace eclab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

struct RadialNode {
  double r;
  double d;  // R - r, kept separately so log(R/r) survives near the rim
  double w;
  bool ring;
};

struct Axis {
  std::vector<double> x;
  std::vector<double> w;
};

std::vector<RadialNode> radial_nodes(double R, const QuadSpec& q) {
  const GaussRule& g = gauss_rule(q.order);
  const int panels = std::max(4, q.radial / q.order);
  const double h = R / panels;
  std::vector<RadialNode> out;
  auto add = [&](double a, double b, bool from_rim, bool ring) {
    // from_rim: a, b are distances from the rim
    std::vector<double> x, w;
    append_panel(g, a, b, x, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (from_rim)
        out.push_back({R - x[i], x[i], w[i], ring});
      else
        out.push_back({x[i], R - x[i], w[i], ring});
    }
  };
  // center: [0, h] graded geometrically
  double lo = h * std::ldexp(1.0, -q.center_layers);
  add(0.0, lo, false, false);
  for (int k = q.center_layers; k >= 1; --k) add(h * std::ldexp(1.0, -k), h * std::ldexp(1.0, -k + 1), false, false);
  for (int p = 1; p < panels - 1; ++p) add(p * h, (p + 1) * h, false, false);
  // rim: distances [0, h] graded geometrically
  for (int k = 0; k < q.boundary_layers; ++k)
    add(h * std::ldexp(1.0, -k - 1), h * std::ldexp(1.0, -k), true, true);
  add(0.0, h * std::ldexp(1.0, -q.boundary_layers), true, true);
  return out;
}

Axis angular_nodes(const QuadSpec& q, const std::vector<double>& foci, int focus_layers) {
  const GaussRule& g = gauss_rule(q.order);
  const int panels = std::max(4, q.angular / q.order);
  const double w = kTwoPi / panels;
  std::vector<double> breaks;
  for (int p = 0; p <= panels; ++p) breaks.push_back(p * w);
  for (double phi : foci) {
    double c = std::fmod(phi, kTwoPi);
    if (c < 0) c += kTwoPi;
    for (int k = 0; k <= focus_layers; ++k) {
      double off = w * std::ldexp(1.0, -k);
      for (double b : {c - off, c + off}) {
        // fold into [0, 2pi)
        if (b < 0) b += kTwoPi;
        if (b >= kTwoPi) b -= kTwoPi;
        breaks.push_back(b);
      }
    }
    breaks.push_back(c);
  }
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> uniq;
  for (double b : breaks)
    if (uniq.empty() || b - uniq.back() > 1e-15) uniq.push_back(b);
  if (kTwoPi - uniq.back() <= 1e-15) uniq.pop_back();
  uniq.push_back(kTwoPi);
  Axis a;
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) append_panel(g, uniq[i], uniq[i + 1], a.x, a.w);
  return a;
}

struct Sums {
  XReal area, T, L, masked_area, masked_T, weighted_T;
};

struct Integrand {
  bool want_mask = false;
  const TubeNbhd* tube = nullptr;
  const Weight* psi = nullptr;
};

void check_map(const MapDisc& md) {
  if (!(md.R > 0.0)) throw ParameterError("disc radius must be positive");
}

Sums integrate(const MapDisc& md, const QuadSpec& q, const Integrand& what) {
  q.validate();
  check_map(md);
  const auto rad = radial_nodes(md.R, q);
  const Axis base = angular_nodes(q, {}, 0);
  const Axis ring = angular_nodes(q, md.hot_angles, q.focus_layers);
  std::vector<Sums> rows(rad.size());
  parallel_for(rad.size(), [&](std::size_t k) {
    const RadialNode& n = rad[k];
    const Axis& ax = n.ring ? ring : base;
    Sums s;
    EvalCache c1, c2;
    for (std::size_t j = 0; j < ax.x.size(); ++j) {
      cplx z = std::polar(n.r, ax.x[j]);
      c1.clear();
      c2.clear();
      Jet j1 = md.F.g1.jet(z, c1);
      Jet j2 = md.F.g2.jet(z, c2);
      XReal dens = j1.d.norm() + j2.d.norm();
      XReal wd = dens * XReal(ax.w[j]);
      s.area += wd;
      s.L += dens.sqrt() * XReal(ax.w[j]);
      bool outside = false;
      if (what.tube) outside = !in_tube_lift(*what.tube, what.tube->factor == 1 ? j1.v : j2.v);
      if (outside) s.masked_area += wd;
      if (what.psi) {
        ImagePoint ip;
        if (j1.v.is_finite() && j2.v.is_finite() && j1.v.log2_abs() < 52.0 && j2.v.log2_abs() < 52.0) {
          ip.x1 = reduce(md.target.lattice1, j1.v.to_complex());
          ip.x2 = reduce(md.target.lattice2, j2.v.to_complex());
        }
        double p = (*what.psi)(ip);
        if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("weight must take values in [0, 1]");
        s.weighted_T += wd * XReal(p);
      }
    }
    // log(R/r) = -log1p(-d/R) stays accurate for d << R
    double logk = -std::log1p(-n.d / md.R);
    XReal rw(n.r * n.w);
    Sums out;
    out.area = s.area * rw;
    out.T = s.area * XReal(n.r * n.w * logk);
    out.L = s.L * XReal(n.w);
    out.masked_area = s.masked_area * rw;
    out.masked_T = s.masked_area * XReal(n.r * n.w * logk);
    out.weighted_T = s.weighted_T * XReal(n.r * n.w * logk);
    rows[k] = out;
  });
  Sums total;
  for (const auto& r : rows) {
    total.area += r.area;
    total.T += r.T;
    total.L += r.L;
    total.masked_area += r.masked_area;
    total.masked_T += r.masked_T;
    total.weighted_T += r.weighted_T;
  }
  return total;
}

XReal boundary_length(const MapDisc& md, const QuadSpec& q) {
  const Axis ring = angular_nodes(q, md.hot_angles, q.focus_layers);
  std::vector<XReal> parts(ring.x.size());
  parallel_for(ring.x.size(), [&](std::size_t j) {
    cplx z = std::polar(md.R, ring.x[j]);
    XReal dens = md.F.g1.jet(z).d.norm() + md.F.g2.jet(z).d.norm();
    parts[j] = dens.sqrt() * XReal(ring.w[j] * md.R);
  });
  XReal total;
  for (const auto& p : parts) total += p;
  return total;
}

double ratio(const XReal& a, const XReal& b) {
  if (b.is_zero()) return 0.0;
  return (a / b).to_double();
}

}  // namespace

void QuadSpec::validate() const {
  if (order != 4 && order != 8 && order != 16 && order != 32) throw ParameterError("quadrature order must be 4, 8, 16 or 32");
  if (radial < 16 || angular < 32) throw ParameterError("quadrature grid below the minimum 16 x 32");
  if (radial < 4 * order || angular < 4 * order) throw ParameterError("quadrature grid needs at least 4 panels per axis");
  if (log_nodes < 16) throw ParameterError("nested route needs at least 16 log nodes");
  if (center_layers < 0 || boundary_layers < 0 || focus_layers < 0 || center_layers > 60 ||
      boundary_layers > 60 || focus_layers > 60)
    throw ParameterError("grading layers must lie in [0, 60]");
  if (!(inner_cutoff > 0.0 && inner_cutoff < 1.0)) throw ParameterError("inner_cutoff must lie in (0, 1)");
}

nlohmann::json QuadSpec::to_json() const {
  return {{"radial", radial},
          {"angular", angular},
          {"order", order},
          {"center_layers", center_layers},
          {"boundary_layers", boundary_layers},
          {"focus_layers", focus_layers},
          {"log_nodes", log_nodes},
          {"inner_cutoff", inner_cutoff}};
}

QuadSpec QuadSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("quadrature spec must be an object");
  QuadSpec q;
  for (const auto& [k, v] : j.items()) {
    if (k == "inner_cutoff") {
      if (!v.is_number()) throw ConfigError("inner_cutoff must be a number");
      q.inner_cutoff = v.get<double>();
      continue;
    }
    if (!v.is_number_integer()) throw ConfigError("quadrature '" + k + "' must be an integer");
    int x = v.get<int>();
    if (k == "radial")
      q.radial = x;
    else if (k == "angular")
      q.angular = x;
    else if (k == "order")
      q.order = x;
    else if (k == "center_layers")
      q.center_layers = x;
    else if (k == "boundary_layers")
      q.boundary_layers = x;
    else if (k == "focus_layers")
      q.focus_layers = x;
    else if (k == "log_nodes")
      q.log_nodes = x;
    else
      throw ConfigError("unknown quadrature key '" + k + "'");
  }
  q.validate();
  return q;
}

MapDisc::MapDisc(HoloPair f, double r, ProductTarget t, std::vector<double> hot)
    : F(std::move(f)), R(r), target(std::move(t)), hot_angles(std::move(hot)) {
  if (!(R > 0.0)) throw ParameterError("disc radius must be positive");
  if (!(R < F.validity_radius())) throw DomainError("disc radius must stay below the validity radius");
  if (!F.g1.is_nonconstant(0.5 * R) && !F.g2.is_nonconstant(0.5 * R))
    throw DegenerateMapError("constant map");
}

TPair nevanlinna_T(const MapDisc& md, const QuadSpec& q) {
  Sums s = integrate(md, q, {});
  TPair out;
  out.log_kernel = s.T;

  // nested route: integral over u = log t of A(t), with A(t) the image area of
  // D_t from the boundary form (t/2) int Re(conj(G) G' e^{i theta}) d theta
  const GaussRule& g = gauss_rule(q.order);
  const double u1 = std::log(md.R);
  const double u0 = std::log(md.R * q.inner_cutoff);
  const int panels = std::max(4, q.log_nodes / q.order);
  const double hu = (u1 - u0) / panels;
  std::vector<double> us, ws;
  for (int p = 0; p < panels - 1; ++p) append_panel(g, u0 + p * hu, u0 + (p + 1) * hu, us, ws);
  // grade the last panel toward t = R in the same way as the radial grid
  std::vector<double> dist, dw;  // distance below u1
  for (int k = 0; k < q.boundary_layers; ++k)
    append_panel(g, hu * std::ldexp(1.0, -k - 1), hu * std::ldexp(1.0, -k), dist, dw);
  append_panel(g, 0.0, hu * std::ldexp(1.0, -q.boundary_layers), dist, dw);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    us.push_back(u1 - dist[i]);
    ws.push_back(dw[i]);
  }
  const Axis ang = angular_nodes(q, md.hot_angles, q.focus_layers);
  std::vector<XReal> rows(us.size());
  parallel_for(us.size(), [&](std::size_t k) {
    double t = std::exp(us[k]);
    XReal acc;
    EvalCache c;
    for (std::size_t j = 0; j < ang.x.size(); ++j) {
      cplx e = std::polar(1.0, ang.x[j]);
      cplx z = t * e;
      for (const HoloFunc* gi : {&md.F.g1, &md.F.g2}) {
        c.clear();
        Jet jt = gi->jet(z, c);
        XComplex term = jt.v.conj() * jt.d * XComplex(e);
        acc += term.real() * XReal(ang.w[j]);
      }
    }
    rows[k] = acc * XReal(0.5 * t * ws[k]);
  });
  XReal nested;
  for (const auto& r : rows) nested += r;
  out.nested = nested;
  out.rel_gap = out.log_kernel.is_zero() ? 0.0 : std::fabs(((nested - out.log_kernel) / out.log_kernel).to_double());
  return out;
}

XReal nevanlinna_L(const MapDisc& md, const QuadSpec& q) { return integrate(md, q, {}).L; }

std::pair<XReal, XReal> ahlfors_pair(const MapDisc& md, const QuadSpec& q) {
  Sums s = integrate(md, q, {});
  return {s.area, boundary_length(md, q)};
}

std::pair<XReal, XReal> masked_masses(const MapDisc& md, const TubeNbhd& tube, const QuadSpec& q) {
  Integrand what;
  what.tube = &tube;
  Sums s = integrate(md, q, what);
  return {s.masked_T, s.masked_area};
}

double normalized_eval(const MapDisc& md, const Weight& psi, const QuadSpec& q) {
  Integrand what;
  what.psi = &psi;
  Sums s = integrate(md, q, what);
  if (s.T.is_zero()) throw DegenerateMapError("T vanishes");
  return ratio(s.weighted_T, s.T);
}

CurrentReport report(const MapDisc& md, const std::optional<TubeNbhd>& tube, const QuadSpec& q) {
  Integrand what;
  if (tube) what.tube = &*tube;
  Sums s = integrate(md, q, what);
  CurrentReport r;
  r.T = s.T;
  r.L = s.L;
  r.area = s.area;
  r.boundary = boundary_length(md, q);
  r.masked_T = s.masked_T;
  r.masked_area = s.masked_area;
  r.has_tube = tube.has_value();
  if (r.T.is_zero() || r.area.is_zero()) throw DegenerateMapError("T or area vanishes");
  if (!r.T.is_finite() || !r.area.is_finite()) throw DegenerateMapError("masses are not finite");
  r.L_over_T = ratio(r.L, r.T);
  r.boundary_over_area = ratio(r.boundary, r.area);
  r.masked_T_over_T = ratio(r.masked_T, r.T);
  r.masked_area_over_area = ratio(r.masked_area, r.area);
  return r;
}

XReal disc_area(const HoloPair& F, cplx c, double r, int radial, int angular) {
  const GaussRule& g = gauss_rule(8);
  std::vector<double> rs, wr, ts, wt;
  for (int p = 0; p < radial / 8; ++p) append_panel(g, r * p * 8 / radial, r * (p + 1) * 8 / radial, rs, wr);
  for (int p = 0; p < angular / 8; ++p) append_panel(g, kTwoPi * p * 8 / angular, kTwoPi * (p + 1) * 8 / angular, ts, wt);
  XReal total;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    XReal row;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      cplx z = c + std::polar(rs[i], ts[j]);
      row += (F.g1.jet(z).d.norm() + F.g2.jet(z).d.norm()) * XReal(wt[j]);
    }
    total += row * XReal(rs[i] * wr[i]);
  }
  return total;
}

nlohmann::json xreal_to_json(const XReal& x) {
  double d = x.to_double();
  if (std::isfinite(d) && (d == 0.0) == x.is_zero()) return d;
  return x.to_string();
}

XReal xreal_from_json(const nlohmann::json& j) {
  if (j.is_number()) return XReal(j.get<double>());
  if (j.is_string()) return XReal::parse(j.get<std::string>());
  throw ConfigError("expected a number or a numeric string");
}

nlohmann::json CurrentReport::to_json() const {
  nlohmann::json j = {{"T", xreal_to_json(T)},
                      {"L", xreal_to_json(L)},
                      {"ahlfors_area", xreal_to_json(area)},
                      {"boundary_length", xreal_to_json(boundary)},
                      {"L_over_T", L_over_T},
                      {"boundary_over_area", boundary_over_area}};
  if (has_tube) {
    j["masked_T"] = xreal_to_json(masked_T);
    j["masked_area"] = xreal_to_json(masked_area);
    j["masked_T_over_T"] = masked_T_over_T;
    j["masked_area_over_area"] = masked_area_over_area;
  }
  return j;
}

std::string CurrentReport::csv_header() {
  return "T,L,ahlfors_area,boundary_length,masked_T,masked_area,L_over_T,boundary_over_area,masked_T_over_T,"
         "masked_area_over_area";
}

std::string CurrentReport::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << T.to_string() << ',' << L.to_string() << ',' << area.to_string() << ',' << boundary.to_string() << ','
     << masked_T.to_string() << ',' << masked_area.to_string() << ',' << L_over_T << ',' << boundary_over_area
     << ',' << masked_T_over_T << ',' << masked_area_over_area;
  return os.str();
}

}  // namespace eclab
