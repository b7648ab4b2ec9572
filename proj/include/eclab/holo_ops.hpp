#pragma once

// Certified bounds, truncation and zero location for HoloFunc.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "eclab/holo.hpp"

namespace eclab {

struct DiscDomain {
  cplx center{0.0, 0.0};
  double radius = 1.0;
  double margin = 2.0;

  DiscDomain() = default;
  DiscDomain(cplx c, double r, double m);
  // margin defaults to 1.5 * radius
  DiscDomain(cplx c, double r);
};

// lower <= true value <= upper (for sups); for infs lower is the certified
// side and upper the sampled minimum.
struct ModulusBracket {
  XReal lower;
  XReal upper;
  double lo() const { return lower.to_double(); }
  double hi() const { return upper.to_double(); }
};

ModulusBracket sup_modulus(const HoloFunc& f, const DiscDomain& disc, int n_boundary = 4096);
// Sup over the circle |z - center| = radius (no interior involved).
ModulusBracket sup_on_circle(const HoloFunc& f, cplx center, double radius, int n_samples);
ModulusBracket inf_modulus_on_disc(const HoloFunc& f, const DiscDomain& disc, int grid = 64);

struct Truncation {
  HoloFunc poly;
  std::uint64_t degree = 0;
  double error_bound = 0.0;  // certified sup |f - poly| on the closed disc
  bool unchanged = false;
};

Truncation taylor_truncate(const HoloFunc& f, const DiscDomain& disc, double eps);

struct CircleContour {
  cplx center;
  double radius;
};
struct RectContour {
  cplx lo;  // lower-left corner
  cplx hi;  // upper-right corner
};
using Contour = std::variant<CircleContour, RectContour>;

using JetFn = std::function<Jet(cplx)>;

int count_zeros(const HoloFunc& f, const Contour& contour);
int count_zeros(const JetFn& f, const Contour& contour);

struct PreimageOptions {
  double tile = 0.0;  // tile side; 0 picks min(0.5, (Rmax - Rmin) / 8)
  int max_depth = 6;  // tile subdivisions when Newton fails
  // Optional veto on tiles (lo, hi corners), e.g. to skip wild regions.
  std::function<bool(cplx, cplx)> accept_tile;
};

struct Preimage {
  cplx z;
  cplx w;
  double residual = 0.0;
};

// Targets for a tile whose image lies in the disc (w0, radius).
using TargetGenerator = std::function<std::vector<cplx>(cplx w0, double radius)>;

Preimage find_preimage(const HoloFunc& f, const std::vector<cplx>& targets, double r_min, double r_max,
                       const PreimageOptions& opt = {});
Preimage find_preimage(const HoloFunc& f, const TargetGenerator& targets, double r_min, double r_max,
                       const PreimageOptions& opt = {});

// Structural sup bound on a closed disc: atoms by sampled sup with the
// Lipschitz correction, then |f+g| <= |f|+|g|, |fg| <= |f||g|, |f^n| <= |f|^n.
// Loose but immune to cancellation and to the scale of intermediate values.
XReal structural_sup(const HoloFunc& f, const DiscDomain& disc, int n_boundary = 1024);

}  // namespace eclab
