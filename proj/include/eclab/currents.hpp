#pragma once

// Nevanlinna and Ahlfors functionals of a holomorphic disc in E1 x E2.
//
// Everything integrates the pullback density delta = |G1'|^2 + |G2'|^2 (or its
// square root) over a disc of radius R. Masses can be astronomically large,
// so all accumulation is in XReal.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eclab/holo.hpp"
#include "eclab/torus.hpp"

namespace eclab {

// Fixed tensor grid in polar coordinates. Composite Gauss-Legendre panels in
// r and theta; the last radial panel is split geometrically toward r = R and
// the first toward r = 0. In the outer ring the angular panels are also split
// geometrically around the map's hot angles, where peaks sit.
struct QuadSpec {
  int radial = 512;
  int angular = 1024;
  int order = 8;
  int center_layers = 12;
  int boundary_layers = 50;
  int focus_layers = 30;
  int log_nodes = 512;        // nested route, over u = log t
  double inner_cutoff = 1e-4;  // nested route starts at R * inner_cutoff

  void validate() const;
  nlohmann::json to_json() const;
  static QuadSpec from_json(const nlohmann::json& j);
};

struct MapDisc {
  HoloPair F;
  double R = 1.0;
  ProductTarget target;
  // Boundary directions where the map concentrates; quadrature hint only.
  std::vector<double> hot_angles;

  MapDisc(HoloPair f, double r, ProductTarget t = {}, std::vector<double> hot = {});
};

// Image of a source point in X, if the lift is small enough to reduce.
struct ImagePoint {
  std::optional<TorusPoint> x1;
  std::optional<TorusPoint> x2;
  bool representable() const { return x1.has_value() && x2.has_value(); }
};

using Weight = std::function<double(const ImagePoint&)>;

struct TPair {
  XReal nested;
  XReal log_kernel;
  double rel_gap = 0.0;
};

struct CurrentReport {
  XReal T;
  XReal L;
  XReal area;
  XReal boundary;
  XReal masked_T;
  XReal masked_area;
  bool has_tube = false;
  double L_over_T = 0.0;
  double boundary_over_area = 0.0;
  double masked_T_over_T = 0.0;
  double masked_area_over_area = 0.0;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

TPair nevanlinna_T(const MapDisc& md, const QuadSpec& quad = {});
XReal nevanlinna_L(const MapDisc& md, const QuadSpec& quad = {});
std::pair<XReal, XReal> ahlfors_pair(const MapDisc& md, const QuadSpec& quad = {});
std::pair<XReal, XReal> masked_masses(const MapDisc& md, const TubeNbhd& tube, const QuadSpec& quad = {});
double normalized_eval(const MapDisc& md, const Weight& psi, const QuadSpec& quad = {});
CurrentReport report(const MapDisc& md, const std::optional<TubeNbhd>& tube, const QuadSpec& quad = {});

// Area of the image of a closed disc D(c, r) inside the source disc:
// integral of delta over it (used by the witness audit).
XReal disc_area(const HoloPair& F, cplx c, double r, int radial = 32, int angular = 64);

// JSON for extended reals: a plain number when it fits a double, otherwise a
// decimal string such as "3.1e+4567".
nlohmann::json xreal_to_json(const XReal& x);
XReal xreal_from_json(const nlohmann::json& j);

}  // namespace eclab
