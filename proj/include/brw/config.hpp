// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical experiment configuration: model block, displacement block,
// run block, mandatory seed, output directory. Parsed from JSON; the
// canonical serialized form is hashed into every artifact for provenance.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "brw/branching_model.hpp"
#include "brw/displacement_model.hpp"

namespace brw {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunSettings {
  int n = 12;
  int replicas = 1000;
  double delta = 0.05;   // limit-measure truncation (pre-scaling)
  double zeta = 0.5;     // hat-function inner cutoff
  double theta = 0.2;    // one-jump threshold parameter, in (0, zeta/2)
  double eta = 0.01;     // record floor as a fraction of b_n
  double hat_height = 1.0;
  std::vector<int> k_list{2, 4, 6, 8};
  std::vector<int> b_list{1, 2, 3};
  std::vector<int> n_grid{8, 10, 12, 14};
  std::int64_t population_cap = 2'000'000;
  int w_depth = 14;
  int w_reps = 10000;
  int limit_samples = 10000;
  std::int64_t table_cap = 0;     // 0 = automatic
  double abort_tolerance = 0.01;  // tolerated fraction of cap-aborted replicas
};

struct ExperimentConfig {
  BranchingModel model;
  DisplacementModel displacement;
  RunSettings run;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::string canonical;          // canonical JSON this config hashes to
  std::uint64_t config_hash = 0;  // FNV-1a of the canonical form
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& data);

// Doubles rendered with full round-trip precision; used by every artifact.
std::string format_double(double v);

}  // namespace brw
