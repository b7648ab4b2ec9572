#pragma once

// Extension of maps from countably many scheduled discs into one entire map,
// one certified two-disc approximation at a time.
//
// A merge blends the two maps with a separating polynomial phi (about 0 on
// the old disc, about 1 on the new one), sharpened by rounds of the Hermite
// blend I_x(p, p), of degree 2p - 1 and flat of order p at 0 and 1 (p = 2 is the
// smoothstep x^2 (3 - 2x)). The error is certified from the structure
// P - F = (g - F) phi on the old disc and P - g = (F - g)(1 - phi) on the new.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "eclab/holo.hpp"
#include "eclab/torus.hpp"

namespace eclab {

struct DiscMap {
  HoloPair g;
  double radius = 0.0;
};

struct DiscProgram {
  std::vector<DiscMap> maps;
  ProductTarget target;

  void validate() const;
  nlohmann::json to_json() const;
  static DiscProgram from_json(const nlohmann::json& j);
};

struct ScheduleEntry {
  int source = 1;               // 1-based program index
  std::uint64_t phi1 = 1;       // Cantor pair of j
  std::uint64_t phi2 = 1;
  std::uint64_t repetition = 1;  // occurrences of source among 1..j
};

ScheduleEntry schedule(std::uint64_t j, int n_sources);

struct MergeOptions {
  int degree_cap = 2048;  // separating polynomial degree
  int K_max = 40;         // sharpening rounds
  int samples = 4096;     // boundary samples per disc
};

struct MergeResult {
  HoloPair P;
  bool unchanged = false;
  int phi_degree = 0;
  int K = 0;               // sharpening rounds
  std::vector<int> orders;  // their blend orders
  double phi_on_F = 0.0;   // certified sup |phi_0| on the old disc
  double phi_on_g = 0.0;   // certified sup |1 - phi_0| on the new disc
  XReal sup_F_on_g;
  XReal sup_g_on_F;
  double dev_F = 0.0;  // certified sup |P - F| on the old disc
  double dev_g = 0.0;  // certified sup |P - g| on the new disc
  double truncation = 0.0;
  // pieces of P = Fe phibar + ge phi, kept for resampling
  HoloPair Fe, ge;
  HoloFunc phi, phibar;

  nlohmann::json to_json() const;
};

// F on the closed disc D(a, R), g on the closed disc D(c, r). Disjoint discs.
MergeResult merge_two_discs(const HoloPair& F, cplx a, double R, const HoloPair& g, cplx c, double r, double eps,
                            const MergeOptions& opt = {});

// Sampled sup over the circle |z - c| = r of |(A(z) - B(z)) w(z)| (pair norm). With
// A = ge, B = Fe, w = phi this is P - Fe, free of the cancellation in P - F
// where F is huge.
double sampled_blend_residual(const HoloPair& A, const HoloPair& B, const HoloFunc& w, cplx c, double r,
                              int samples);

// Sampled sup over the circle |z - c| = r of |P(z) - Q(z - shift)| (pair norm).
double sampled_pair_deviation(const HoloPair& P, const HoloPair& Q, cplx c, double r, int samples,
                              cplx shift = 0.0);

struct PatchConfig {
  DiscProgram program;
  int steps = 1;
  double eps_scale = 1.0;  // eps_i = eps_scale * eps_base^i
  double eps_base = 0.5;
  double slack = 0.5;      // R_i = |c_i| + r_i + slack
  MergeOptions merge;

  double eps(int i) const;
  void validate() const;
  nlohmann::json to_json() const;
  static PatchConfig from_json(const nlohmann::json& j);
};

struct PatchStep {
  int j = 0;
  ScheduleEntry entry;
  cplx center;
  double radius = 0.0;
  double R = 0.0;
  double eps = 0.0;
  HoloPair program;  // the scheduled map, centred at 0
  HoloPair ghat;     // its polynomial version translated to center
  HoloPair F;
  MergeResult merge;
  double resampled_F = 0.0;  // 2x-density recheck on the old disc
  double resampled_g = 0.0;  // and on the new one
  double final_dev = 0.0;
  double bound = 0.0;
};

struct PatchOutcome {
  bool ok = true;
  bool error = false;
  std::string message;
  std::vector<PatchStep> trace;

  nlohmann::json trace_json() const;
  std::string deviations_csv() const;
  std::string summary() const;
};

PatchOutcome run_patch(const PatchConfig& cfg);

// f(z) -> f((1 - 2^-l) z)
HoloFunc scale_to_boundary(const HoloFunc& f, int l);

}  // namespace eclab
