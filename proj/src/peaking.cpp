#include "eclab/peaking.hpp"

#include <cmath>

#include "eclab/errors.hpp"

namespace eclab {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

HoloFunc PeakingFunction::func() const {
  const double k = 1.0 + delta1;
  return HoloFunc::poly({0.5 * k, k * std::polar(1.0, -theta0) / (2.0 * R)});
}

double PeakingFunction::sup_on_disc() const {
  const double k = 1.0 + delta1;
  const double v = 0.5 * k + (k / (2.0 * R)) * R;
  return std::nextafter(std::nextafter(v, HUGE_VAL), HUGE_VAL);
}

nlohmann::json PeakingFunction::to_json() const { return {{"R", R}, {"theta0", theta0}, {"delta1", delta1}}; }

PeakingFunction PeakingFunction::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("R") || !j.contains("theta0") || !j.contains("delta1"))
    throw ConfigError("peaking function needs R, theta0, delta1");
  return peaking_from_delta(j["R"].get<double>(), j["theta0"].get<double>(), j["delta1"].get<double>());
}

PeakingFunction peaking_from_delta(double R, double theta0, double delta1) {
  if (!(R > 0.0) || !std::isfinite(R)) throw ParameterError("peaking radius must be positive");
  if (!(delta1 >= 0.0) || !std::isfinite(delta1)) throw ParameterError("delta1 must be nonnegative");
  if (!std::isfinite(theta0)) throw ParameterError("theta0 must be finite");
  return {R, theta0, delta1};
}

PeakingFunction make_peaking(double R, double theta0, double cap_radius) {
  if (!(R > 0.0)) throw ParameterError("peaking radius must be positive");
  if (!(cap_radius > 0.0) || !(cap_radius < 0.5 * R)) throw ParameterError("cap radius must lie in (0, R/2)");
  // the exceptional cap has radius 2R sqrt(1 - 1/(1+d)^2); aim just inside it
  const double s = cap_radius * (1.0 - 1e-9) / (2.0 * R);
  const double delta = 1.0 / std::sqrt((1.0 - s) * (1.0 + s)) - 1.0;
  if (!(delta > 0.0)) throw ParameterError("cap radius too small to resolve in double precision");
  PeakingFunction p = peaking_from_delta(R, theta0, delta);
  if (!(exceptional_cap_radius(p) < cap_radius)) throw ParameterError("cap radius out of the solvable range");
  return p;
}

double exceptional_cap_radius(const PeakingFunction& p) {
  const double k = 1.0 + p.delta1;
  // 1 - 1/k^2 without cancellation for small delta1
  const double t = p.delta1 * (2.0 + p.delta1) / (k * k);
  return 2.0 * p.R * std::sqrt(std::min(1.0, t));
}

HoloFunc make_H(const PeakingFunction& peak, std::uint64_t M) {
  if (M == 0) throw ParameterError("oscillation exponent must be positive");
  return HoloFunc::constant(1.0) + HoloFunc::power(peak.func(), M);
}

nlohmann::json WitnessDisc::to_json() const {
  return {{"center", complex_to_json(c)},
          {"radius", r},
          {"m", m},
          {"inf_X_lower", x_inf.lo()},
          {"sup_X_upper", x_sup.hi()},
          {"inf_G2X_lower", g2x_inf.lo()}};
}

bool witness_certified(const PeakingFunction& peak, const HoloFunc& G2hat, double m, cplx c, double r,
                       WitnessDisc* out) {
  if (!(r > 0.0)) return false;
  const HoloFunc X = peak.func();
  const DiscDomain d(c, r);
  if (!(std::abs(c) + r < peak.R)) return false;
  if (r * 1.5 >= G2hat.validity_radius() - std::abs(c)) return false;
  ModulusBracket sup = sup_modulus(X, d, 1024);
  if (!(sup.upper < XReal(m))) return false;
  ModulusBracket inf = inf_modulus_on_disc(X, d, 32);
  if (!(inf.lower > XReal(std::pow(m, 2.0 / 3.0)))) return false;
  ModulusBracket g = inf_modulus_on_disc(G2hat * X.derivative(), d, 32);
  if (!(g.lower > XReal(0.0))) return false;
  if (out) *out = {c, r, inf, sup, g, m};
  return true;
}

WitnessDisc witness_disc(const PeakingFunction& peak, const HoloFunc& G2hat, double R, double m) {
  if (!(m > 1.0)) throw ParameterError("witness search needs m > 1");
  if (std::fabs(R - peak.R) > 1e-12 * R) throw ParameterError("peak lives on a different disc");
  const HoloFunc X = peak.func();
  const HoloFunc dX = X.derivative();
  const double lo = std::pow(m, 2.0 / 3.0);
  const cplx z0 = peak.z0();
  const double cap = std::max(exceptional_cap_radius(peak), 1e-300);
  // polar search around z0: geometric distances, inward directions
  double best_margin = 0.0;
  cplx best = z0;
  bool found = false;
  for (int i = 0; i < 64; ++i) {
    double dist = 2.0 * cap * std::ldexp(1.0, -i) * 0.999;
    for (int k = 0; k < 33; ++k) {
      double phi = peak.theta0 + kPi * (0.5 + k / 32.0);  // inward half-plane
      cplx z = z0 + std::polar(dist, phi);
      if (!(std::abs(z) < R)) continue;
      double a = std::abs(X(z));
      if (!(a > lo && a < m)) continue;
      Jet g = G2hat.jet(z);
      if ((g.v * XComplex(dX(z))).is_zero()) continue;
      // relative margin to the nearest of the two strict bounds
      double margin = std::min(std::log(a / lo), std::log(m / a));
      if (margin > best_margin) {
        best_margin = margin;
        best = z;
        found = true;
      }
    }
  }
  if (!found) throw NotFoundError("no point of the witness set on the search grid");
  // grow until certification fails, then halve once
  double r = std::max(1e-3 * cap * best_margin, 1e-15 * R);
  WitnessDisc w;
  int shrink = 0;
  while (!witness_certified(peak, G2hat, m, best, r, &w)) {
    r *= 0.25;
    if (++shrink > 40) throw NotFoundError("witness candidate could not be certified");
  }
  for (int it = 0; it < 80; ++it) {
    WitnessDisc next;
    if (!witness_certified(peak, G2hat, m, best, 2.0 * r, &next)) break;
    r *= 2.0;
  }
  double half = 0.5 * r;
  if (!witness_certified(peak, G2hat, m, best, half, &w)) witness_certified(peak, G2hat, m, best, r, &w);
  return w;
}

}  // namespace eclab
