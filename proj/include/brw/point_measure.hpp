// SPDX-License-Identifier: Apache-2.0
//
// Finite point measures on the real line and the statistics used to compare
// them: counts in intervals, Laplace functionals against hat test functions,
// Kolmogorov-Smirnov distances and order statistics.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace brw {

// A finite multiset of (location, multiplicity) atoms, kept sorted by
// location with duplicate locations merged at construction. Locations must
// be finite; multiplicities are strictly positive. Atoms at exactly 0 are
// admitted mechanically (degenerate zero-displacement runs produce them)
// but carry no extremal content.
class PointMeasure {
 public:
  struct Atom {
    double location;
    std::int64_t multiplicity;
  };

  PointMeasure() = default;
  explicit PointMeasure(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }
  std::int64_t total_mass() const { return total_mass_; }

  // Total multiplicity with location in the half-open interval (lo, hi].
  std::int64_t counts_in(double lo, double hi) const;

  // sum multiplicity * f(location).
  double integrate(const std::function<double(double)>& f) const;

  // exp(-sum multiplicity * f(location)).
  double laplace_at(const std::function<double(double)>& f) const;

  // The k largest locations, counted with multiplicity; fewer are returned
  // if the total mass is below k.
  std::vector<double> order_statistics(std::int64_t k) const;

  double max_location() const;  // requires non-empty

  // The scaling operator: every location multiplied by b.
  PointMeasure scaled(double b) const;

  // Superposition of two measures.
  static PointMeasure merge(const PointMeasure& a, const PointMeasure& b);

 private:
  std::vector<Atom> atoms_;
  std::int64_t total_mass_ = 0;
};

// Continuous test function vanishing on |x| <= zeta and equal to a on
// |x| >= 2*zeta: f(x) = a * clamp((|x| - zeta)/zeta, 0, 1).
struct HatFunction {
  double zeta;
  double height;

  double operator()(double x) const;
};

// Two-sample Kolmogorov-Smirnov statistic: sup |ECDF_a - ECDF_b|.
// Ties between and within samples are handled by advancing both ECDFs past
// every run of equal values before comparing.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

// One-sample KS statistic against a cdf callable evaluated at the sample
// points (classical two-sided form).
double ks_vs_cdf(std::span<const double> samples,
                 const std::function<double(double)>& cdf);

}  // namespace brw
