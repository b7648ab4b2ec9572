#include "eclab/holo_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "eclab/errors.hpp"
#include "eclab/gauss.hpp"

namespace eclab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

void require_inside(const HoloFunc& f, cplx center, double radius, const char* what) {
  if (!(std::abs(center) + radius < f.validity_radius()))
    throw DomainError(std::string(what) + ": disc reaches outside the validity radius");
}

}  // namespace

DiscDomain::DiscDomain(cplx c, double r, double m) : center(c), radius(r), margin(m) {
  if (!(r > 0.0) || !(m > r)) throw ParameterError("disc needs margin > radius > 0");
}

DiscDomain::DiscDomain(cplx c, double r) : DiscDomain(c, r, 1.5 * r) {}

ModulusBracket sup_on_circle(const HoloFunc& f, cplx center, double radius, int n) {
  if (n < 16) throw ParameterError("at least 16 boundary samples are required");
  require_inside(f, center, radius, "sup_modulus");
  XReal best;
  XReal dbest;
  EvalCache cache;
  for (int k = 0; k < n; ++k) {
    cplx z = center + std::polar(radius, kTwoPi * k / n);
    cache.clear();
    Jet j = f.jet(z, cache);
    best = max(best, j.v.abs());
    dbest = max(dbest, j.d.abs());
  }
  // nearest sample is at most pi*r/n away along the arc
  XReal slack = dbest * XReal(2.0 * M_PI * radius / n);
  return {best, best + slack};
}

ModulusBracket sup_modulus(const HoloFunc& f, const DiscDomain& disc, int n_boundary) {
  return sup_on_circle(f, disc.center, disc.radius, n_boundary);
}

ModulusBracket inf_modulus_on_disc(const HoloFunc& f, const DiscDomain& disc, int grid) {
  if (grid < 4) throw ParameterError("inf_modulus_on_disc needs grid >= 4");
  require_inside(f, disc.center, disc.radius, "inf_modulus_on_disc");
  const int n_theta = std::max(16, 4 * grid);
  XReal lowest;
  bool first = true;
  XReal dbest;
  EvalCache cache;
  auto visit = [&](cplx z) {
    cache.clear();
    Jet j = f.jet(z, cache);
    XReal a = j.v.abs();
    if (first || a < lowest) lowest = a;
    first = false;
    dbest = max(dbest, j.d.abs());
  };
  visit(disc.center);
  for (int i = 1; i <= grid; ++i) {
    double r = disc.radius * i / grid;
    for (int k = 0; k < n_theta; ++k) visit(disc.center + std::polar(r, kTwoPi * k / n_theta));
  }
  // every point of the disc is within h of a grid point
  double dr = disc.radius / grid;
  double arc = M_PI * disc.radius / n_theta;
  double h = std::sqrt(0.25 * dr * dr + arc * arc);
  XReal lower = lowest - dbest * XReal(2.0 * h);
  if (lower.sign() < 0) lower = XReal(0.0);
  return {lower, lowest};
}

Truncation taylor_truncate(const HoloFunc& f, const DiscDomain& disc, double eps) {
  if (!(eps > 0.0)) throw ParameterError("taylor_truncate needs eps > 0");
  const double r = disc.radius;
  const double rho = disc.margin;
  if (!(r < rho)) throw ParameterError("taylor_truncate needs radius < margin");
  require_inside(f, disc.center, rho, "taylor_truncate");
  const double q = r / rho;
  XReal m_rho = sup_on_circle(f, disc.center, rho, 4096).upper;
  if (m_rho.is_zero()) return {HoloFunc::constant(0.0), 0, 0.0, false};
  if (!std::isfinite(m_rho.to_double()))
    throw ParameterError("taylor_truncate: function too large on the margin circle");
  const double mr = m_rho.to_double();
  // smallest n with M q^(n+1) / (1 - q) <= eps / 2
  double need = std::log(0.5 * eps * (1.0 - q) / mr) / std::log(q) - 1.0;
  std::uint64_t n = need <= 0.0 ? 0 : static_cast<std::uint64_t>(std::ceil(need));
  if (f.degree() <= n) return {f, f.degree(), 0.0, true};
  double tail = mr * std::pow(q, static_cast<double>(n + 1)) / (1.0 - q);

  // coefficients from samples on |z - c| = r; aliasing pulls in a_{k+jN}
  std::size_t big_n = 16;
  while (big_n < 2 * (n + 1)) big_n *= 2;
  auto aliasing = [&](std::size_t nn) {
    double qn = std::pow(q, static_cast<double>(nn));
    return mr / (1.0 - q) * qn / (1.0 - qn);
  };
  while (aliasing(big_n) > 0.5 * eps && big_n < (1u << 20)) big_n *= 2;

  std::vector<cplx> samples(big_n);
  std::vector<cplx> roots(big_n);
  for (std::size_t k = 0; k < big_n; ++k) roots[k] = std::polar(1.0, -kTwoPi * static_cast<double>(k) / big_n);
  EvalCache cache;
  for (std::size_t k = 0; k < big_n; ++k) {
    cache.clear();
    samples[k] = f.eval_x(disc.center + r * std::conj(roots[k]), cache).to_complex();
  }
  // coefficients of the scaled variable u = (z - c) / r
  std::vector<cplx> coeffs(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    cplx s = 0.0;
    for (std::size_t k = 0; k < big_n; ++k) s += samples[k] * roots[(j * k) % big_n];
    coeffs[j] = s / static_cast<double>(big_n);
  }
  HoloFunc p = HoloFunc::poly(std::move(coeffs), 1.0 / r, -disc.center / r);
  return {p, n, tail + aliasing(big_n), false};
}

namespace {

struct ContourSamples {
  std::vector<cplx> z;
  std::vector<cplx> dz;  // quadrature weight times dz/ds
  double spacing = 0.0;  // max distance from a contour point to its nearest node
};

ContourSamples sample_contour(const Contour& c, int level) {
  ContourSamples s;
  if (const auto* circ = std::get_if<CircleContour>(&c)) {
    int n = 64 << level;
    for (int k = 0; k < n; ++k) {
      cplx e = std::polar(1.0, kTwoPi * k / n);
      s.z.push_back(circ->center + circ->radius * e);
      s.dz.push_back(cplx(0.0, kTwoPi / n) * circ->radius * e);
    }
    s.spacing = M_PI * circ->radius / n;
    return s;
  }
  const auto& rect = std::get<RectContour>(c);
  const GaussRule& g = gauss_rule(16);
  int panels = 1 << level;
  cplx corners[5] = {rect.lo, {rect.hi.real(), rect.lo.imag()}, rect.hi, {rect.lo.real(), rect.hi.imag()}, rect.lo};
  for (int e = 0; e < 4; ++e) {
    cplx a = corners[e];
    cplx b = corners[e + 1];
    for (int p = 0; p < panels; ++p) {
      std::vector<double> t;
      std::vector<double> w;
      append_panel(g, static_cast<double>(p) / panels, static_cast<double>(p + 1) / panels, t, w);
      for (std::size_t i = 0; i < t.size(); ++i) {
        s.z.push_back(a + (b - a) * t[i]);
        s.dz.push_back((b - a) * w[i]);
      }
    }
    // the GL end gap dominates: first node sits ~0.02 of a panel inside
    s.spacing = std::max(s.spacing, std::abs(b - a) / panels * 0.5);
  }
  return s;
}

}  // namespace

int count_zeros(const JetFn& f, const Contour& contour) {
  constexpr int kMaxLevel = 10;
  double prev = std::nan("");
  for (int level = 0; level <= kMaxLevel; ++level) {
    ContourSamples s = sample_contour(contour, level);
    XReal lowest;
    XReal dmax;
    bool first = true;
    cplx total = 0.0;
    for (std::size_t k = 0; k < s.z.size(); ++k) {
      Jet j = f(s.z[k]);
      XReal a = j.v.abs();
      if (first || a < lowest) lowest = a;
      first = false;
      dmax = max(dmax, j.d.abs());
      if (j.v.is_zero()) throw ContourError("zero of the function on the contour");
      total += (j.d / j.v).to_complex() * s.dz[k];
    }
    XReal certified = lowest - dmax * XReal(2.0 * s.spacing);
    double w = (total / cplx(0.0, kTwoPi)).real();
    bool free_of_zeros = certified.sign() > 0;
    if (free_of_zeros && std::isfinite(w)) {
      double dist = std::fabs(w - std::round(w));
      if (dist < 0.25 && std::isfinite(prev) && std::round(prev) == std::round(w))
        return static_cast<int>(std::lround(w));
    }
    prev = free_of_zeros ? w : std::nan("");
    if (level == kMaxLevel) {
      if (!free_of_zeros) throw ContourError("cannot certify the contour is zero-free");
      throw ContourError("winding number did not settle near an integer");
    }
  }
  return 0;
}

int count_zeros(const HoloFunc& f, const Contour& contour) {
  EvalCache cache;
  return count_zeros(
      [&](cplx z) {
        cache.clear();
        return f.jet(z, cache);
      },
      contour);
}

namespace {

struct Newton {
  cplx z;
  double residual;
  bool converged;
};

Newton newton(const JetFn& g, cplx z, double scale) {
  Jet j = g(z);
  double res = j.v.abs().to_double();
  for (int it = 0; it < 50; ++it) {
    if (res <= 1e-13 * scale) break;
    if (j.d.is_zero()) break;
    cplx step = (j.v / j.d).to_complex();
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    double lambda = 1.0;
    cplx zn = z - step;
    Jet jn = g(zn);
    double rn = jn.v.abs().to_double();
    while (!(rn < res) && lambda > 1.0 / 1024.0) {
      lambda *= 0.5;
      zn = z - lambda * step;
      jn = g(zn);
      rn = jn.v.abs().to_double();
    }
    if (!(rn < res)) {
      // stalled at rounding level
      break;
    }
    z = zn;
    j = jn;
    res = rn;
    if (std::abs(step) * lambda < 1e-16 * std::max(1.0, std::abs(z))) break;
  }
  return {z, res, res <= 1e-10};
}

bool inside(cplx z, cplx lo, cplx hi, double tol) {
  return z.real() >= lo.real() - tol && z.real() <= hi.real() + tol && z.imag() >= lo.imag() - tol &&
         z.imag() <= hi.imag() + tol;
}

int safe_count(const JetFn& g, cplx& lo, cplx& hi) {
  try {
    return count_zeros(g, RectContour{lo, hi});
  } catch (const ContourError&) {
    // nudge the contour off the zero; neighbours overlap a little, which the
    // dedupe step absorbs
    cplx pad = 0.013 * (hi - lo);
    lo -= pad;
    hi += pad;
    return count_zeros(g, RectContour{lo, hi});
  }
}

void solve_tile(const JetFn& g, cplx lo, cplx hi, int count, int depth, int max_depth, double scale,
                std::vector<Newton>& out) {
  cplx c = 0.5 * (lo + hi);
  double tol = 1e-9 * std::abs(hi - lo);
  if (count == 1 || depth >= max_depth) {
    Jet j = g(c);
    cplx start = c;
    if (!j.d.is_zero()) {
      cplx lin = c - (j.v / j.d).to_complex();
      if (inside(lin, lo, hi, 0.0)) start = lin;
    }
    Newton nw = newton(g, start, scale);
    if (nw.converged && inside(nw.z, lo, hi, tol)) {
      out.push_back(nw);
      if (count == 1) return;
    }
    if (depth >= max_depth) {
      if (nw.converged) out.push_back(nw);
      return;
    }
  }
  cplx mid = c;
  cplx quads[4][2] = {{lo, mid},
                      {{mid.real(), lo.imag()}, {hi.real(), mid.imag()}},
                      {{lo.real(), mid.imag()}, {mid.real(), hi.imag()}},
                      {mid, hi}};
  for (auto& q : quads) {
    cplx a = q[0];
    cplx b = q[1];
    int k = safe_count(g, a, b);
    if (k > 0) solve_tile(g, a, b, k, depth + 1, max_depth, scale, out);
  }
}

double arg_2pi(cplx z) {
  double a = std::arg(z);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

Preimage find_preimage(const HoloFunc& f, const TargetGenerator& targets, double r_min, double r_max,
                       const PreimageOptions& opt) {
  if (!(r_min >= 0.0) || !(r_min < r_max)) throw ParameterError("find_preimage needs 0 <= Rmin < Rmax");
  if (!(r_max < f.validity_radius())) throw DomainError("find_preimage: Rmax beyond validity radius");
  const double h = opt.tile > 0.0 ? opt.tile : std::min(0.5, (r_max - r_min) / 8.0);
  // an irrational offset keeps tile edges off lattice-like points
  const double shift = h * 0.3183098861837907;
  const double origin = -r_max - h + shift;
  const int n_tiles = static_cast<int>(std::ceil((2.0 * r_max + 2.0 * h) / h)) + 1;
  std::set<std::pair<int, int>> done;
  std::vector<Preimage> found;
  EvalCache cache;

  auto tile_range = [&](int i, int j, double& dmin, double& dmax) {
    double x0 = origin + i * h, x1 = x0 + h, y0 = origin + j * h, y1 = y0 + h;
    double cx = std::clamp(0.0, x0, x1), cy = std::clamp(0.0, y0, y1);
    dmin = std::hypot(cx, cy);
    double fx = std::max(std::fabs(x0), std::fabs(x1)), fy = std::max(std::fabs(y0), std::fabs(y1));
    dmax = std::hypot(fx, fy);
  };

  for (double band_lo = r_min; band_lo < r_max; band_lo += h) {
    const double band_hi = std::min(r_max, band_lo + h);
    for (int i = 0; i < n_tiles; ++i) {
      for (int j = 0; j < n_tiles; ++j) {
        double dmin, dmax;
        tile_range(i, j, dmin, dmax);
        if (dmin > band_hi || dmax < band_lo) continue;
        if (dmax >= f.validity_radius()) continue;
        if (!done.insert({i, j}).second) continue;
        cplx lo(origin + i * h, origin + j * h);
        cplx hi = lo + cplx(h, h);
        if (opt.accept_tile && !opt.accept_tile(lo, hi)) continue;
        cplx c = 0.5 * (lo + hi);
        cache.clear();
        XComplex fc = f.eval_x(c, cache);
        // image of the tile lies within |f'|max * half-diagonal of f(c)
        XReal dmax_f;
        for (int e = 0; e < 4; ++e) {
          for (int k = 0; k < 8; ++k) {
            cplx corner[5] = {lo, {hi.real(), lo.imag()}, hi, {lo.real(), hi.imag()}, lo};
            cplx z = corner[e] + (corner[e + 1] - corner[e]) * (k / 8.0);
            cache.clear();
            dmax_f = max(dmax_f, f.jet(z, cache).d.abs());
          }
        }
        double reach = 2.0 * dmax_f.to_double() * h * M_SQRT1_2 * 1.05 + 1e-12;
        cplx fcv = fc.to_complex();
        if (!std::isfinite(reach) || !std::isfinite(fcv.real()) || !std::isfinite(fcv.imag())) continue;
        for (cplx w : targets(fcv, reach)) {
          JetFn g = [&f, w, &cache](cplx z) {
            cache.clear();
            Jet j = f.jet(z, cache);
            j.v = j.v - XComplex(w);
            return j;
          };
          cplx a = lo, b = hi;
          int count = safe_count(g, a, b);
          if (count <= 0) continue;
          std::vector<Newton> roots;
          solve_tile(g, a, b, count, 0, opt.max_depth, std::max(1.0, std::abs(w)), roots);
          for (const auto& nw : roots) {
            double az = std::abs(nw.z);
            if (!(az > r_min) || az > r_max) continue;
            found.push_back({nw.z, w, nw.residual});
          }
        }
      }
    }
    // every root with |z| <= band_hi has been seen by now
    std::vector<Preimage> ready;
    for (const auto& p : found)
      if (std::abs(p.z) <= band_hi) ready.push_back(p);
    if (!ready.empty()) {
      std::sort(ready.begin(), ready.end(), [](const Preimage& a, const Preimage& b) {
        double ra = std::abs(a.z), rb = std::abs(b.z);
        if (std::fabs(ra - rb) > 1e-9 * std::max(1.0, ra)) return ra < rb;
        return arg_2pi(a.z) < arg_2pi(b.z);
      });
      return ready.front();
    }
  }
  throw NotFoundError("no preimage found with Rmin < |z| <= Rmax");
}

Preimage find_preimage(const HoloFunc& f, const std::vector<cplx>& targets, double r_min, double r_max,
                       const PreimageOptions& opt) {
  if (targets.empty()) throw ParameterError("find_preimage needs at least one target");
  return find_preimage(
      f,
      [&targets](cplx w0, double radius) {
        std::vector<cplx> near;
        for (cplx w : targets)
          if (std::abs(w - w0) <= radius) near.push_back(w);
        return near;
      },
      r_min, r_max, opt);
}

namespace {

XReal structural_rec(const HoloFunc& f, const DiscDomain& disc, int n,
                     std::unordered_map<const void*, XReal>& memo) {
  if (f.op() == HoloOp::Poly) {
    if (f.coeffs().size() == 1) return XReal(std::abs(f.coeffs()[0]));
    int samples = static_cast<int>(std::min<std::uint64_t>(1u << 16, std::max<std::uint64_t>(n, 8 * f.degree() + 64)));
    return sup_on_circle(f, disc.center, disc.radius, samples).upper;
  }
  const void* key = &f.children();
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  XReal out;
  switch (f.op()) {
    case HoloOp::Sum:
      for (const auto& k : f.children()) out += structural_rec(k, disc, n, memo);
      break;
    case HoloOp::Product:
      out = XReal(1.0);
      for (const auto& k : f.children()) out *= structural_rec(k, disc, n, memo);
      break;
    case HoloOp::Scale:
      out = XReal(std::abs(f.scale_factor())) * structural_rec(f.children()[0], disc, n, memo);
      break;
    case HoloOp::Power:
      out = structural_rec(f.children()[0], disc, n, memo).pow(f.exponent());
      break;
    default:
      break;
  }
  memo.emplace(key, out);
  return out;
}

}  // namespace

XReal structural_sup(const HoloFunc& f, const DiscDomain& disc, int n_boundary) {
  require_inside(f, disc.center, disc.radius, "structural_sup");
  std::unordered_map<const void*, XReal> memo;
  return structural_rec(f, disc, n_boundary, memo);
}

}  // namespace eclab
