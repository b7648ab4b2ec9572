#pragma once

// The ping-pong engine. Odd steps anchor the disc boundary on a fiber through
// e_{1,k} and twist the second coordinate; even steps swap the roles. Each
// step records anchors, exponents, error budgets and all measured ratios.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eclab/currents.hpp"
#include "eclab/holo.hpp"
#include "eclab/peaking.hpp"
#include "eclab/torus.hpp"

namespace eclab {

// value(l) = values[l-1] when given, else scale * base^l.
struct Schedule {
  double scale = 1.0;
  double base = 0.5;
  std::vector<double> values;

  double value(int l) const;
  nlohmann::json to_json() const;
  static Schedule from_json(const nlohmann::json& j, const char* what);
};

struct SynthConfig {
  ProductTarget target;
  int steps = 2;
  std::uint64_t seed = 0;
  HoloPair seed_map{HoloFunc::identity(), HoloFunc::poly({1.0, 1.0})};
  double R0 = 1.0;
  double eps0 = 1.0;
  Schedule tau{1.0, 0.5, {}};
  Schedule tube_rho{1.0, 0.5, {}};
  // "lipschitz": cap = cap_factor * rho_l / max(1, Lip); "schedule": cap_schedule
  std::string cap_mode = "lipschitz";
  double cap_factor = 0.9;
  Schedule cap_schedule{0.25, 0.5, {}};
  double divisor = 2023.0;
  std::uint64_t M_start = 2;
  // each step must outgrow the mass of every earlier peak; the defaults
  // accept 2^10, 2^19, 2^30, 2^44 on steps 1..4
  std::uint64_t M_cap = std::uint64_t{1} << 62;
  QuadSpec quad;
  double anchor_growth = 4.0;  // Rmax = R_{l-1} + 1 + anchor_growth * (R_{l-1} + 1)
  double anchor_tame = 4.0;    // sup |G'| allowed on an anchor tile
  double margin = 0.5;         // V'_l = D(R_l + margin)
  int probes = 32;
  int probe_degree = 4;
  int probe_floor_log2 = -60;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// A coordinate kept as base * prod (1 + X_k^{M_k}), so differences between
// successive maps can be formed without cancellation.
struct Coordinate {
  HoloFunc base;
  std::vector<HoloFunc> twists;  // each X_k^{M_k}

  HoloFunc func() const;
};

struct StepState {
  int ell = 0;
  std::array<Coordinate, 2> coords;
  double R = 1.0;
  std::optional<cplx> z;
  std::uint64_t M = 0;
  double eps = 1.0;
  std::vector<double> hot_angles;
  nlohmann::json record;

  HoloPair map() const { return {coords[0].func(), coords[1].func()}; }
};

struct EpsilonLedger {
  double divisor = 2023.0;
  std::vector<double> eps;  // eps[0] = eps0

  // sum_{j >= l} 3 eps_j / divisor over the executed steps
  double drift_bound(int l) const;
  bool chain_ok() const;
  nlohmann::json to_json() const;
};

struct SweepRow {
  std::uint64_t M = 0;
  CurrentReport rep;
  XReal drift;
  XReal audit_lower;
  bool drift_ok = false;
  bool audit_ok = false;
  bool pass = false;

  nlohmann::json to_json() const;
};

struct Sweep {
  std::vector<SweepRow> rows;
  std::optional<std::size_t> accepted;
};

struct Runge {
  HoloPair G;
  double error = 0.0;
};

StepState step0(const SynthConfig& cfg);
Runge runge_step(const StepState& s, const SynthConfig& cfg);

struct Anchor {
  cplx z;
  double R = 0.0;
  cplx lift;  // value of the anchor coordinate at z
  double residual = 0.0;
};
// Factor i in {1, 2}. A point with |z| > R_{l-1} + 1 mapping onto e_point.
Anchor find_anchor(const HoloFunc& Gi, const TorusPoint& e_point, double R_prev, const SynthConfig& cfg);

struct StepContext {
  int ell = 0;
  int anchor_factor = 1;
  double R_prev = 1.0;
  double R = 1.0;
  double eps_prev = 1.0;
  double tau = 0.5;
  std::vector<double> hot_angles;
};

Sweep select_M(const StepState& prev, const StepContext& ctx, const PeakingFunction& peak, const WitnessDisc& witness,
               const TubeNbhd& tube, const SynthConfig& cfg);

struct ProbeResult {
  bool pass = true;
  int run = 0;
  double worst[4] = {0, 0, 0, 0};

  nlohmann::json to_json() const;
};

ProbeResult stability_probe(const StepState& s, const StepContext& ctx, const TubeNbhd& tube, double eps_candidate,
                            const SynthConfig& cfg);

enum class RunStatus { ok, threshold_unmet, error };

struct SynthOutcome {
  RunStatus status = RunStatus::ok;
  std::string message;
  std::vector<StepState> trace;
  EpsilonLedger ledger;
  std::vector<std::string> csv_rows;  // sweep table rows

  nlohmann::json trace_json() const;
  std::string ratios_csv() const;
  std::string summary() const;
};

SynthOutcome run(const SynthConfig& cfg);

// Sampled sup of |F_final - F_l| on the circle |z| = R_l for every executed l,
// formed from the factor lists.
std::vector<double> final_drift(const std::vector<StepState>& trace, int samples = 4096);

}  // namespace eclab
