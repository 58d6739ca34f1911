// SPDX-License-Identifier: Apache-2.0
//
// Generation-at-a-time simulation of the branching random walk. A replica
// streams the tree without storing genealogy: each particle carries its
// position, the ancestral heavy-type displacement values above the record
// floor (enough to rebuild the single-big-jump process away from zero), and
// per-type counts of ancestral exceedances for the one-jump diagnostics.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "brw/branching_model.hpp"
#include "brw/displacement_model.hpp"
#include "brw/point_measure.hpp"
#include "brw/rng.hpp"

namespace brw {

struct Particle {
  int type = 0;
  double position = 0.0;
  // Ancestral type-Q displacement values with |value| > record floor,
  // in root-to-leaf order; absolute units.
  std::vector<double> heavy_record;
  // Per-type counts of ancestral |displacement| > theta b_n / n.
  // Empty means all zero; allocated lazily.
  std::vector<std::uint16_t> jump_counts;
};

struct GenerationState {
  int generation = 0;
  std::vector<Particle> particles;
  std::vector<std::int64_t> type_counts;
};

// Run-wide constants fixed by (model, n, thresholds) before simulation.
struct SimThresholds {
  int n = 0;                       // target generation
  double rho = 0.0;
  double b_n = 1.0;
  double record_floor = 0.0;       // eta * b_n, absolute units
  double one_jump_abs = 0.0;       // theta * b_n / n, absolute units
  double theta = 0.0;
  std::int64_t population_cap = 2'000'000;
};

SimThresholds make_thresholds(double rho, double b_n, int n, double eta,
                              double theta, std::int64_t population_cap);

struct PopulationCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReplicaResult {
  int n = 0;
  PointMeasure extremal;       // N_n: locations b_n^-1 S_v over the leaves
  PointMeasure single_jump;    // record-restricted part of the one-jump process
  double max_position = 0.0;   // M_n, real units
  std::int64_t total = 0;      // |D_n|
  double w_hat = 0.0;          // |D_n| / rho^n
  double theta = 0.0;          // threshold the jump counts were taken at
  std::vector<bool> one_jump_flag;  // per type, see one_jump_events
  bool aborted = false;
};

GenerationState initial_state(const BranchingModel& model, Rng& rng);

// One generation step. Throws PopulationCapExceeded past the hard cap.
GenerationState step_generation(const GenerationState& state,
                                const BranchingModel& model,
                                const DisplacementModel& dmodel,
                                const SimThresholds& thresholds, Rng& rng);

// Full replica to generation n; a population-cap overrun is returned as an
// aborted, flagged result rather than an exception.
ReplicaResult run_replica(const BranchingModel& model,
                          const DisplacementModel& dmodel,
                          const SimThresholds& thresholds, Rng& rng);

// Martingale-limit samples total / rho^depth from the plain tree. The root
// follows the model's root distribution unless root_type is given.
std::vector<double> estimate_w(const BranchingModel& model, double rho,
                               int depth, int reps, Rng& rng,
                               std::optional<int> root_type = std::nullopt);

// Per-type one-jump violation flags of a finished replica: for p < Q the
// flag is set when some leaf has an ancestral type-p exceedance, for p = Q
// when some leaf has two or more. theta must match the simulation threshold.
std::vector<bool> one_jump_events(const ReplicaResult& replica, double theta);

}  // namespace brw
