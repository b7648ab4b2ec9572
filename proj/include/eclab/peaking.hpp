#pragma once

// Peaking functions at a boundary point of D_R, the oscillation factors
// H = 1 + X^M, and the witness discs on which |X| sits strictly between
// m^(2/3) and m.

#include <json.hpp>

#include "eclab/holo.hpp"
#include "eclab/holo_ops.hpp"

namespace eclab {

// X(z) = (1 + delta1) (z e^{-i theta0} + R) / (2R). Entire; |X| < 1 on the
// closed disc outside a small cap around z0 = R e^{i theta0}.
struct PeakingFunction {
  double R = 1.0;
  double theta0 = 0.0;
  double delta1 = 0.0;

  cplx z0() const { return std::polar(R, theta0); }
  HoloFunc func() const;
  // sup of |X| on the closed disc, |c0| + |c1| R = 1 + delta1, rounded up
  double sup_on_disc() const;
  nlohmann::json to_json() const;
  static PeakingFunction from_json(const nlohmann::json& j);
};

// delta1 in closed form so that the exceptional set of the closed disc lies in
// the open disc D(z0, cap_radius). Needs 0 < cap_radius < R/2.
PeakingFunction make_peaking(double R, double theta0, double cap_radius);
PeakingFunction peaking_from_delta(double R, double theta0, double delta1);

// Smallest r with {z in closed D_R : |X(z)| >= 1} inside D(z0, r).
double exceptional_cap_radius(const PeakingFunction& peak);

HoloFunc make_H(const PeakingFunction& peak, std::uint64_t M);

struct WitnessDisc {
  cplx c;
  double r = 0.0;
  ModulusBracket x_inf;      // inf |X| on the disc
  ModulusBracket x_sup;      // sup |X| on the disc
  ModulusBracket g2x_inf;    // inf |G2hat X'| on the disc
  double m = 0.0;

  nlohmann::json to_json() const;
};

// Checks the three strict bounds on D(c, r) with holo_core brackets.
bool witness_certified(const PeakingFunction& peak, const HoloFunc& G2hat, double m, cplx c, double r,
                       WitnessDisc* out = nullptr);

WitnessDisc witness_disc(const PeakingFunction& peak, const HoloFunc& G2hat, double R, double m);

}  // namespace eclab
