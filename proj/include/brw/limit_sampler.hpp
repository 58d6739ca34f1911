// SPDX-License-Identifier: Apache-2.0
//
// Direct sampler for the limiting cluster point process, built from its
// explicit representation: a Poisson number of clusters, each carrying a
// cluster size G, integer decorations T_1..T_G drawn from a geometric
// mixture of generation-total laws, a point of the limit measure, and the
// common random scale ((rho-1)^{-1} W)^{1/alpha}.
//
// The limit measure has infinite mass near zero, so the underlying Poisson
// measure is sampled above a truncation delta (pre-scaling). Every statistic
// computed from such a sample must live above delta times the largest
// plausible scale; samples carry that support floor so callers can assert it.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "brw/branching_model.hpp"
#include "brw/displacement_model.hpp"
#include "brw/point_measure.hpp"
#include "brw/rng.hpp"

namespace brw {

// Where the martingale-limit variable W comes from: exactly 1 (deterministic
// offspring), or an empirical sample vector.
class WSource {
 public:
  static WSource degenerate(double value = 1.0);
  static WSource empirical(std::vector<double> samples);

  bool is_degenerate() const { return samples_.size() == 1; }
  const std::vector<double>& samples() const { return samples_; }
  double max_value() const { return max_; }
  double sample(Rng& rng) const;

 private:
  std::vector<double> samples_;
  double max_ = 0.0;
};

struct LimitParams {
  double rho = 0.0;
  double alpha = 0.0;
  std::vector<double> sigma;  // left eigenvector, sums to 1
  JointLawQ joint;
  GenerationLawTable table;   // law of the generation-m total rooted at Q
  // pmf of the cluster size G: P(G=g) = sum_q sigma_q P(#type-Q children of
  // a type-q parent = g).
  std::vector<std::pair<int, double>> g_pmf;
  WSource w_source;
  // Enables the exact overflow-bucket fallback of the decoration sampler.
  std::optional<BranchingModel> model;

  double mean_g() const;
  int max_g() const;
  double scale_of(double w) const;  // ((rho-1)^{-1} w)^{1/alpha}
  double max_scale() const { return scale_of(w_source.max_value()); }
};

// Assembles consistent limit parameters from a validated model. The table
// depth is chosen so the geometric weight beyond it is below 1e-6; cap 0
// selects a generous default.
LimitParams make_limit_params(const BranchingModel& model, const JointLawQ& joint,
                              WSource w_source, std::int64_t cap = 0);

int sample_g(const LimitParams& params, Rng& rng);

// (T_1, ..., T_count): one geometric generation index M shared by the
// vector, then i.i.d. draws from the generation-M total law. A draw landing
// in the table's overflow bucket falls back to exact conditional simulation
// of the plain tree (possible only when the params carry the model).
std::vector<std::int64_t> sample_t(const LimitParams& params, int count, Rng& rng);

// Points of the limit-measure Poisson process restricted to
// {max_{j<=g} |x_j| > delta}, as g-dimensional coordinate vectors.
std::vector<std::vector<double>> sample_prm(const JointLawQ& joint, double delta,
                                            int g, Rng& rng);

struct ClusterSample {
  int g = 0;
  std::vector<std::int64_t> t;  // decorations actually attached to points
  std::vector<double> xi;       // unscaled point coordinates, one per t entry
};

struct NStarSample {
  PointMeasure points;
  double w = 0.0;
  double scale = 0.0;
  double support_floor = 0.0;  // delta * scale; sample exact above this
  std::vector<ClusterSample> clusters;  // filled when keep_clusters is set
};

NStarSample sample_n_star(const LimitParams& params, double delta, Rng& rng,
                          bool keep_clusters = false);

// Constant of the limiting maximum law: the weighted pattern sum of limit
// rectangle masses over the cluster-size pmf, divided by rho - 1.
double kappa_lambda(const LimitParams& params);

// P(limit maximum <= x) = E exp(-kappa W x^-alpha), averaged over the W
// source.
double limit_max_cdf(const LimitParams& params, double x);

struct LaplaceEstimate {
  double value = 0.0;
  double stderr_value = 0.0;
};

// Monte Carlo evaluation of the limit Laplace functional at a hat function,
// via the mixed representation: the inner integral is sampled from the limit
// measure restricted to the support of f with its finite mass applied as an
// analytic factor, then averaged over W.
LaplaceEstimate laplace_functional_limit(const LimitParams& params,
                                         const HatFunction& f,
                                         int inner_samples, Rng& rng);

// pmf of the decoration attached to a single point in the i.i.d.-axes case:
// the geometric mixture of the generation-total rows. Atoms above the table
// cap are left in an implicit remainder (returned as second member).
std::pair<std::map<std::int64_t, double>, double> decoration_multiplicity_pmf(
    const LimitParams& params);

}  // namespace brw
