#pragma once

// Lattices in C, the projections C -> C/Gamma, torus distances and tubes.

#include <complex>
#include <optional>

#include <json.hpp>

#include "eclab/scaled.hpp"

namespace eclab {

class Lattice {
 public:
  Lattice(cplx omega1, cplx omega2);

  static Lattice square() { return {1.0, cplx(0.0, 1.0)}; }
  static Lattice hexagonal() { return {1.0, cplx(0.5, std::sqrt(3.0) / 2.0)}; }

  cplx omega1() const { return w1_; }
  cplx omega2() const { return w2_; }
  double cell_area() const;
  // Radius of the largest open disc that embeds in the torus.
  double packing_radius() const;
  // Smallest r with every point within r of the lattice.
  double covering_radius() const;

  // Real coordinates (s, t) with z = s*omega1 + t*omega2.
  void coordinates(cplx z, double& s, double& t) const;
  cplx point(double s, double t) const { return s * w1_ + t * w2_; }
  // A Lagrange-Gauss reduced basis of the same lattice.
  cplx reduced1() const { return r1_; }
  cplx reduced2() const { return r2_; }

  bool operator==(const Lattice& o) const { return w1_ == o.w1_ && w2_ == o.w2_; }
  bool operator!=(const Lattice& o) const { return !(*this == o); }

  nlohmann::json to_json() const;
  static Lattice from_json(const nlohmann::json& j);

 private:
  cplx w1_, w2_;
  cplx r1_, r2_;
  double inv_[4];  // inverse of [[Re w1, Re w2], [Im w1, Im w2]]
};

struct TorusPoint {
  Lattice lattice;
  cplx rep;         // representative in the fundamental parallelogram
  double s = 0.0;   // lattice coordinates of rep, in [0, 1)
  double t = 0.0;

  nlohmann::json to_json() const;
};

TorusPoint reduce(const Lattice& lat, cplx z);
double torus_dist(const Lattice& lat, const TorusPoint& p, const TorusPoint& q);
// Distance from the class of a complex value to p, without building a point.
double torus_dist_to(const TorusPoint& p, cplx z);

// Kronecker sequence in lattice coordinates driven by the plastic number.
TorusPoint dense_sequence(const Lattice& lat, std::uint64_t index);

struct ProductTarget {
  Lattice lattice1 = Lattice::square();
  Lattice lattice2 = Lattice::hexagonal();

  const Lattice& factor(int i) const { return i == 1 ? lattice1 : lattice2; }
  nlohmann::json to_json() const;
  static ProductTarget from_json(const nlohmann::json& j);
};

// Points whose factor-`factor` coordinate is within rho of center; the other
// factor is unconstrained.
struct TubeNbhd {
  int factor = 1;
  TorusPoint center;
  double rho = 0.0;

  TubeNbhd(int factor, TorusPoint center, double rho);
  // Open disc of radius rho embeds in the factor torus.
  bool embedded() const;
  TubeNbhd doubled() const { return {factor, center, 2.0 * rho}; }
  nlohmann::json to_json() const;
};

bool in_tube(const TubeNbhd& tube, const TorusPoint& x1, const TorusPoint& x2);
// Membership from the lifted coordinate value in the tube's factor. Values
// too large to carry a meaningful fractional part count as outside.
bool in_tube_lift(const TubeNbhd& tube, const XComplex& coord);

}  // namespace eclab
