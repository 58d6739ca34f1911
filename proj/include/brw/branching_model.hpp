// SPDX-License-Identifier: Apache-2.0
//
// Multi-type offspring laws with finite support, spectral data of the mean
// matrix, and exact generation-total distributions.
//
// Types are indexed 1..Q with type Q reserved for the heavy-tailed
// displacement law. Every supported offspring vector has all components
// >= 1, so trees have no leaves, the mean matrix is positive, and the
// x log x moment condition holds automatically.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "brw/rng.hpp"

namespace brw {

using OffspringVector = std::vector<int>;  // children per type, all >= 1

struct OffspringAtom {
  OffspringVector counts;
  double probability;
};

enum class OffspringFamily { deterministic, independent_per_type, explicit_table };

// Per-type discrete pmf on {1..k_max}, given as (value, probability) pairs.
using CountPmf = std::vector<std::pair<int, double>>;

// Offspring law of a Q-type branching process. Whatever family it is built
// from, the law is normalized to one explicit finite table per parent type,
// which keeps every downstream computation (means, truncations, generation
// totals, marginals) exact.
class OffspringLaw {
 public:
  static OffspringLaw deterministic(std::vector<OffspringVector> per_parent);
  static OffspringLaw independent_per_type(
      std::vector<std::vector<CountPmf>> per_parent);
  static OffspringLaw explicit_table(
      std::vector<std::vector<OffspringAtom>> per_parent);

  int num_types() const { return static_cast<int>(tables_.size()); }
  OffspringFamily family() const { return family_; }
  const std::vector<OffspringAtom>& table(int parent_type) const;
  int max_count() const { return k_max_; }

  // Marginal pmf of the number of type-`child_type` children of a
  // `parent_type` parent.
  CountPmf marginal_count_pmf(int parent_type, int child_type) const;

  const OffspringVector& sample(int parent_type, Rng& rng) const;

 private:
  OffspringLaw(OffspringFamily family,
               std::vector<std::vector<OffspringAtom>> tables);

  OffspringFamily family_;
  std::vector<std::vector<OffspringAtom>> tables_;  // [parent-1][atom]
  std::vector<std::vector<double>> cdfs_;           // per parent, cumulative
  int k_max_ = 0;
};

struct BranchingModel {
  int num_types;                          // Q
  OffspringLaw offspring;
  std::vector<double> root_distribution;  // pi, length Q, sums to 1

  int heavy_type() const { return num_types; }
  int sample_root_type(Rng& rng) const;
};

BranchingModel make_branching_model(int num_types, OffspringLaw offspring,
                                    std::vector<double> root_distribution);

// Small dense square matrix; enough linear algebra for Q x Q mean matrices.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

  int size() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * n_ + j];
  }

  SquareMatrix multiply(const SquareMatrix& rhs) const;
  SquareMatrix power(int k) const;

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// mu_pq = E[# type-q children of a type-p parent]; rows are parent types.
SquareMatrix mean_matrix(const BranchingModel& model);

struct SpectralData {
  SquareMatrix mean;          // M
  double rho;                 // Perron-Frobenius eigenvalue, > 1 required
  std::vector<double> sigma;  // left eigenvector, sigma . 1 = 1
  std::vector<double> theta;  // right eigenvector, sigma . theta = 1
};

// Power iteration on M and its transpose. Entries >= 1 guarantee
// primitivity, so convergence is geometric; iteration cap 1e5.
SpectralData perron_frobenius(const SquareMatrix& m, double tol = 1e-12);

struct ValidationCheck {
  std::string name;
  bool pass;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::optional<SpectralData> spectral;

  bool ok() const;
};

// No-leaf support, x log x bound, positive regularity, supercriticality.
ValidationReport validate_model(const BranchingModel& model);

// Exact law of the total population of a depth-m tree, rooted at a fixed
// type, with totals above `cap` aggregated into an overflow bucket. The
// retained atoms are exact: truncation at cap is closed under the
// generation recursion because offspring counts are >= 1.
struct GenerationPmfRow {
  std::vector<std::int64_t> values;  // ascending, probability > 0
  std::vector<double> pmf;
  std::vector<double> cdf;  // cumulative over retained atoms
  double overflow = 0.0;    // mass of totals > cap

  double retained_mass() const { return values.empty() ? 0.0 : cdf.back(); }
  double pmf_at(std::int64_t value) const;
  // Retained atom by CDF inversion; nullopt means the overflow bucket.
  std::optional<std::int64_t> sample(Rng& rng) const;
};

// Rows m = 0..m_max of the generation-total law rooted at the heavy type Q.
class GenerationLawTable {
 public:
  static GenerationLawTable build(const BranchingModel& model, int m_max,
                                  std::int64_t cap);

  int m_max() const { return static_cast<int>(rows_.size()) - 1; }
  std::int64_t cap() const { return cap_; }
  const GenerationPmfRow& row(int m) const;

 private:
  std::int64_t cap_ = 0;
  std::vector<GenerationPmfRow> rows_;
};

// Single table row rooted at type Q. Throws if the cap retains less than
// 99% of the mass at the requested generation.
GenerationPmfRow generation_total_pmf(const BranchingModel& model, int m,
                                      std::int64_t cap);

// Plain simulation of the total population at generation m rooted at
// `root_type` (no displacements). Used as the independent oracle for the
// tables and as the overflow-bucket fallback of the limit sampler.
std::int64_t simulate_generation_total(const BranchingModel& model,
                                       int root_type, int m, Rng& rng);

}  // namespace brw
