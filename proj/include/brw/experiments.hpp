// SPDX-License-Identifier: Apache-2.0
//
// Orchestration shared by the CLI and the acceptance suite: validated model
// bundles, parallel replica sweeps with per-replica random streams, the
// derived experiments (maximum law, one-jump rates, cut/prune convergence,
// limit sampling, superposition), and deterministic artifact rendering.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brw/config.hpp"
#include "brw/limit_sampler.hpp"
#include "brw/simulator.hpp"
#include "brw/tree_transforms.hpp"

namespace brw {

struct ModelBundle {
  ExperimentConfig cfg;
  SpectralData spectral;

  double b_n(int n) const;
  SimThresholds thresholds(int n) const;
};

// Validates the model (throws ConfigError on rejection) and fixes spectral
// data for the run.
ModelBundle prepare_bundle(const ExperimentConfig& cfg);

struct ReplicaStats {
  int replica = 0;
  double mn_over_bn = 0.0;
  double w_hat = 0.0;
  std::int64_t total = 0;
  bool aborted = false;
  std::vector<bool> flags;             // one-jump violation flags per type
  std::int64_t count_above_one = 0;    // N_n mass in (1, inf)
  double hat_gap = 0.0;                // |N_n(f) - Ntilde_n(f)|, run hat fn
};

struct SimulationOutput {
  int n = 0;
  std::vector<ReplicaStats> replicas;
  int aborted_count = 0;
};

SimulationOutput run_simulation(const ModelBundle& bundle, int n, int replicas,
                                int threads);

// Martingale-limit samples with one stream per repetition.
std::vector<double> estimate_w_parallel(const BranchingModel& model, double rho,
                                        int depth, int reps, std::uint64_t seed,
                                        int threads,
                                        std::optional<int> root_type = std::nullopt);

// Limit parameters for the bundle, with the W source estimated empirically
// at the configured depth. Building the decoration table is optional; the
// maximum-law constant does not need it.
LimitParams limit_params_for(const ModelBundle& bundle, int threads,
                             bool with_table = true);

struct MaxDistResult {
  double kappa = 0.0;
  double ks = 0.0;
  int aborted = 0;
  std::vector<double> samples;  // M_n / b_n per surviving replica
};

MaxDistResult run_maxdist(const ModelBundle& bundle, int threads);

struct OneJumpRow {
  int n = 0;
  int replicas = 0;
  int aborted = 0;
  std::vector<double> flag_rate;  // per type
  double gap_fraction = 0.0;      // fraction with |N_n(f) - Ntilde_n(f)| > eps
};

std::vector<OneJumpRow> run_onejump(const ModelBundle& bundle,
                                    const std::vector<int>& n_grid, int replicas,
                                    double gap_epsilon, int threads);

struct ConvergenceRow {
  int n = 0;
  int K = 0;
  int B = 0;  // 0 = cut only, no pruning
  double mean_gap = 0.0;
  double stderr_gap = 0.0;
};

// Shared trees across all (K, B) cells, so the pathwise monotonicity of the
// transforms carries over to the cell means exactly.
std::vector<ConvergenceRow> run_convergence(const ModelBundle& bundle, int n,
                                            int trees, int threads);

struct LimitOutput {
  double kappa = 0.0;
  double delta_used = 0.0;
  double support_floor = 0.0;  // max over samples
  std::vector<std::int64_t> counts_above_one;
  std::vector<NStarSample> samples;  // retained only for small runs
};

LimitOutput run_limit(const ModelBundle& bundle, const LimitParams& params,
                      int n_samples, int threads, bool keep_samples = false);

struct SuperposeResult {
  double ks = 0.0;
  int samples = 0;
};

// Superposition stability: counts above 1 of two independent samples scaled
// by 2^{-1/alpha} and superposed, against counts of a single sample.
SuperposeResult run_superpose(const ModelBundle& bundle, const LimitParams& params,
                              int n_samples, int threads);

// ---- artifact rendering (deterministic byte-for-byte) ----

std::string render_validation_json(const ExperimentConfig& cfg);
// Deviation table of the scaled tail against its limit (columns n, x,
// deviation) and the dominated-type tail ratios.
std::string render_regvar_csv(const ExperimentConfig& cfg,
                              const RegularVariationReport& report);
std::string render_simulation_csv(const ExperimentConfig& cfg,
                                  const SimulationOutput& out);
// Full point measures of a handful of replicas, for small diagnostic runs.
std::string render_replica_points_json(const ExperimentConfig& cfg, int n,
                                       int replicas, int threads);
std::string render_summary_json(const ExperimentConfig& cfg,
                                const SimulationOutput& out);
std::string render_maxdist_json(const ExperimentConfig& cfg,
                                const MaxDistResult& result, double threshold);
std::string render_ecdf_csv(const ExperimentConfig& cfg, const MaxDistResult& result,
                            const LimitParams& params);
std::string render_onejump_csv(const ExperimentConfig& cfg,
                               const std::vector<OneJumpRow>& rows);
std::string render_convergence_csv(const ExperimentConfig& cfg,
                                   const std::vector<ConvergenceRow>& rows);
std::string render_limit_cdf_csv(const ExperimentConfig& cfg,
                                 const LimitParams& params,
                                 const std::vector<double>& x_grid);
std::string render_limit_samples_json(const ExperimentConfig& cfg,
                                      const LimitOutput& out);
std::string render_superpose_json(const ExperimentConfig& cfg,
                                  const SuperposeResult& result, double threshold);

}  // namespace brw
