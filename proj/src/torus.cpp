#include "eclab/torus.hpp"

#include <algorithm>
#include <cmath>

#include "eclab/errors.hpp"
#include "eclab/holo.hpp"

namespace eclab {

namespace {

double circumradius(cplx a, cplx b, cplx c) {
  double la = std::abs(b - c), lb = std::abs(a - c), lc = std::abs(a - b);
  double area2 = std::fabs(((b - a) * std::conj(c - a)).imag());
  return la * lb * lc / (2.0 * area2);
}

// fractional part in [0, 1)
double frac01(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

}  // namespace

Lattice::Lattice(cplx omega1, cplx omega2) : w1_(omega1), w2_(omega2) {
  if (omega1 == cplx(0.0, 0.0) || !((omega2 / omega1).imag() > 0.0))
    throw ParameterError("lattice generators need Im(omega2/omega1) > 0");
  double a = w1_.real(), b = w2_.real(), c = w1_.imag(), d = w2_.imag();
  double det = a * d - b * c;
  inv_[0] = d / det;
  inv_[1] = -b / det;
  inv_[2] = -c / det;
  inv_[3] = a / det;
  // Lagrange-Gauss reduction
  cplx u = w1_, v = w2_;
  if (std::norm(v) < std::norm(u)) std::swap(u, v);
  for (int it = 0; it < 200; ++it) {
    double mu = std::round((v * std::conj(u)).real() / std::norm(u));
    v -= mu * u;
    if (std::norm(v) >= std::norm(u)) break;
    std::swap(u, v);
  }
  if ((v / u).imag() < 0.0) v = -v;
  r1_ = u;
  r2_ = v;
}

double Lattice::cell_area() const { return std::fabs((std::conj(w1_) * w2_).imag()); }

double Lattice::packing_radius() const { return 0.5 * std::abs(r1_); }

double Lattice::covering_radius() const {
  // Delaunay triangles of a reduced basis: split the cell along the shorter diagonal
  cplx d1 = r1_ + r2_, d2 = r2_ - r1_;
  if (std::abs(d1) <= std::abs(d2)) return std::max(circumradius(0.0, r1_, d1), circumradius(0.0, r2_, d1));
  return std::max(circumradius(0.0, r1_, r2_), circumradius(r1_, r2_, d1));
}

void Lattice::coordinates(cplx z, double& s, double& t) const {
  s = inv_[0] * z.real() + inv_[1] * z.imag();
  t = inv_[2] * z.real() + inv_[3] * z.imag();
}

nlohmann::json Lattice::to_json() const {
  return {{"omega1", complex_to_json(w1_)}, {"omega2", complex_to_json(w2_)}};
}

Lattice Lattice::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("omega1") || !j.contains("omega2") || j.size() != 2)
    throw ConfigError("lattice needs exactly 'omega1' and 'omega2'");
  return {complex_from_json(j["omega1"]), complex_from_json(j["omega2"])};
}

TorusPoint reduce(const Lattice& lat, cplx z) {
  double s, t;
  lat.coordinates(z, s, t);
  TorusPoint p{lat, 0.0, frac01(s), frac01(t)};
  p.rep = lat.point(p.s, p.t);
  return p;
}

nlohmann::json TorusPoint::to_json() const { return {{"rep", complex_to_json(rep)}, {"s", s}, {"t", t}}; }

namespace {

double dist_coords(const Lattice& lat, double ds, double dt) {
  ds -= std::round(ds);
  dt -= std::round(dt);
  cplx d = lat.point(ds, dt);
  // nearest translate, searched in the reduced basis around the centred difference
  cplx u = lat.reduced1(), v = lat.reduced2();
  double best = std::abs(d);
  double a, b;
  // coordinates in the reduced basis
  double det = (std::conj(u) * v).imag();
  a = (std::conj(d) * v).imag() / det;
  b = (std::conj(u) * d).imag() / det;
  double a0 = std::round(a), b0 = std::round(b);
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) best = std::min(best, std::abs(d - (a0 + i) * u - (b0 + j) * v));
  return best;
}

}  // namespace

double torus_dist(const Lattice& lat, const TorusPoint& p, const TorusPoint& q) {
  if (p.lattice != lat || q.lattice != lat) throw LatticeMismatch("torus points live on different lattices");
  return dist_coords(lat, p.s - q.s, p.t - q.t);
}

double torus_dist_to(const TorusPoint& p, cplx z) {
  double s, t;
  p.lattice.coordinates(z, s, t);
  return dist_coords(p.lattice, s - p.s, t - p.t);
}

TorusPoint dense_sequence(const Lattice& lat, std::uint64_t index) {
  if (index == 0) throw ParameterError("dense_sequence index starts at 1");
  // plastic number: real root of x^3 = x + 1
  constexpr double kPlastic = 1.32471795724474602596;
  constexpr double kPlastic2 = 1.75487766624669276005;
  // fmod in long double keeps the fractional parts accurate for large indices
  long double l = static_cast<long double>(index);
  double s = static_cast<double>(std::fmod(l * static_cast<long double>(kPlastic), 1.0L));
  double t = static_cast<double>(std::fmod(l * static_cast<long double>(kPlastic2), 1.0L));
  TorusPoint p{lat, lat.point(s, t), frac01(s), frac01(t)};
  return p;
}

nlohmann::json ProductTarget::to_json() const {
  return {{"lattice1", lattice1.to_json()}, {"lattice2", lattice2.to_json()}};
}

ProductTarget ProductTarget::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("target must be an object");
  ProductTarget t;
  for (const auto& [k, v] : j.items()) {
    if (k == "lattice1")
      t.lattice1 = Lattice::from_json(v);
    else if (k == "lattice2")
      t.lattice2 = Lattice::from_json(v);
    else
      throw ConfigError("unknown target key '" + k + "'");
  }
  return t;
}

TubeNbhd::TubeNbhd(int f, TorusPoint c, double r) : factor(f), center(std::move(c)), rho(r) {
  if (f != 1 && f != 2) throw ParameterError("tube factor must be 1 or 2");
  if (!(r > 0.0)) throw ParameterError("tube radius must be positive");
}

bool TubeNbhd::embedded() const { return rho <= center.lattice.packing_radius(); }

nlohmann::json TubeNbhd::to_json() const {
  return {{"factor", factor}, {"center", center.to_json()}, {"rho", rho}};
}

bool in_tube(const TubeNbhd& tube, const TorusPoint& x1, const TorusPoint& x2) {
  const TorusPoint& x = tube.factor == 1 ? x1 : x2;
  return torus_dist(tube.center.lattice, tube.center, x) < tube.rho;
}

bool in_tube_lift(const TubeNbhd& tube, const XComplex& coord) {
  // beyond 2^52 the class of the value in the torus is lost to rounding
  if (!coord.is_finite() || coord.log2_abs() > 52.0) return false;
  return torus_dist_to(tube.center, coord.to_complex()) < tube.rho;
}

}  // namespace eclab
