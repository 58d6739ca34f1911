// SPDX-License-Identifier: Apache-2.0
//
// Displacement laws: regularly varying two-sided Pareto tails for the heavy
// type, lighter laws for the dominated types, the joint law of a type-Q
// sibling block (independent axes or a dependent ray), the scaling sequence
// b_n, and closed-form masses of the limit measure on threshold rectangles.

#pragma once

#include <vector>

#include "brw/rng.hpp"

namespace brw {

class TailLaw {
 public:
  enum class Family {
    two_sided_pareto,     // P(X > x) = balance (x/scale)^-alpha, x >= scale
    shifted_exponential,  // P(|X| > x) = exp(-rate x), symmetric signs
    light_pareto,         // P(|X| > x) = (x/scale)^-index, symmetric signs
    degenerate,           // point mass; diagnostic runs only
  };

  static TailLaw two_sided_pareto(double alpha, double balance, double scale);
  static TailLaw shifted_exponential(double rate);
  static TailLaw light_pareto(double index, double scale);
  static TailLaw degenerate(double value);

  Family family() const { return family_; }
  // Tail index for the Pareto families.
  double alpha() const { return alpha_; }
  // Asymptotic fraction of tail mass on the positive side.
  double balance() const { return balance_; }
  double scale() const { return scale_; }

  // P(|X| > x) exactly, for x >= 0.
  double tail_complement(double x) const;

  double sample(Rng& rng) const;

  // True for the Pareto families, whose tail quantile defines b_n.
  bool regularly_varying() const;

 private:
  TailLaw(Family family, double alpha, double balance, double scale)
      : family_(family), alpha_(alpha), balance_(balance), scale_(scale) {}

  Family family_;
  double alpha_;
  double balance_;
  double scale_;  // also holds rate / point value for the non-Pareto families
};

// Joint law of the displacement block attached to the type-Q children of one
// parent. Either independent copies of the marginal, or a single draw Y
// spread along a fixed ray (c_1 Y, c_2 Y, ...) with c_1 = 1 >= c_2 >= ... > 0.
class JointLawQ {
 public:
  enum class Family { iid_axes, dependent_ray };

  static JointLawQ iid_axes(TailLaw marginal);
  static JointLawQ dependent_ray(TailLaw marginal, std::vector<double> coefficients);

  Family family() const { return family_; }
  const TailLaw& marginal() const { return marginal_; }
  const std::vector<double>& coefficients() const { return coefficients_; }

  std::vector<double> sample_block(int k, Rng& rng) const;

 private:
  JointLawQ(Family family, TailLaw marginal, std::vector<double> coefficients)
      : family_(family), marginal_(marginal), coefficients_(std::move(coefficients)) {}

  Family family_;
  TailLaw marginal_;
  std::vector<double> coefficients_;
};

// Mass the limit measure puts on the rectangle G_{i_1} x ... x G_{i_g} x R x ...
// with G_0 = [-inf, cutoff) and G_1 = (cutoff, inf]. Patterns with no 1 have
// infinite mass (the measure blows up near 0); an inconsistent ray pattern
// yields 0. The default cutoff 1 matches the maxima constant; other cutoffs
// exercise the scaling property.
double limit_rectangle_mass(const JointLawQ& joint, int g,
                            const std::vector<int>& pattern, double cutoff = 1.0);

struct DisplacementModel {
  std::vector<TailLaw> dominated;  // laws of types 1..Q-1, in order
  JointLawQ type_q;
  double gamma;  // declared dominance exponent of the lighter tails

  int num_types() const { return static_cast<int>(dominated.size()) + 1; }

  // Displacements of the k type-`type` children of one parent.
  std::vector<double> sample_block(int type, int k, Rng& rng) const;
};

DisplacementModel make_displacement_model(std::vector<TailLaw> dominated,
                                          JointLawQ type_q, double gamma);

// b_n = inf{x : P(|X_Q| > x) <= rho^-n}; closed form scale * rho^(n/alpha)
// for the Pareto families. Light-tailed families are rejected.
double scaling_bn(double rho, const TailLaw& law_q, int n);

struct RegularVariationReport {
  struct DeviationEntry {
    int n;
    double x;
    double deviation;  // |rho^n F_Q(b_n x) - x^-alpha|
  };
  struct RatioEntry {
    int n;
    int type;
    double ratio;  // F_p(b_n) / F_Q(b_n)
  };
  std::vector<DeviationEntry> deviations;
  std::vector<RatioEntry> ratios;
  double max_deviation = 0.0;
};

RegularVariationReport check_regular_variation(const DisplacementModel& model,
                                               double rho,
                                               const std::vector<int>& n_grid,
                                               const std::vector<double>& x_grid);

}  // namespace brw
