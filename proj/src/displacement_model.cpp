// SPDX-License-Identifier: Apache-2.0

#include "brw/displacement_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace brw {

TailLaw TailLaw::two_sided_pareto(double alpha, double balance, double scale) {
  if (!(alpha > 0.0)) throw std::invalid_argument("pareto: alpha must be > 0");
  if (balance < 0.0 || balance > 1.0)
    throw std::invalid_argument("pareto: balance must be in [0,1]");
  if (!(scale > 0.0)) throw std::invalid_argument("pareto: scale must be > 0");
  return TailLaw(Family::two_sided_pareto, alpha, balance, scale);
}

TailLaw TailLaw::shifted_exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
  return TailLaw(Family::shifted_exponential, 0.0, 0.5, rate);
}

TailLaw TailLaw::light_pareto(double index, double scale) {
  if (!(index > 0.0)) throw std::invalid_argument("light pareto: index must be > 0");
  if (!(scale > 0.0)) throw std::invalid_argument("light pareto: scale must be > 0");
  return TailLaw(Family::light_pareto, index, 0.5, scale);
}

TailLaw TailLaw::degenerate(double value) {
  return TailLaw(Family::degenerate, 0.0, value >= 0.0 ? 1.0 : 0.0, value);
}

double TailLaw::tail_complement(double x) const {
  if (x < 0.0) throw std::invalid_argument("tail_complement: x must be >= 0");
  switch (family_) {
    case Family::two_sided_pareto:
    case Family::light_pareto:
      return x <= scale_ ? 1.0 : std::pow(x / scale_, -alpha_);
    case Family::shifted_exponential:
      return std::exp(-scale_ * x);  // scale_ holds the rate
    case Family::degenerate:
      return std::abs(scale_) > x ? 1.0 : 0.0;  // scale_ holds the value
  }
  return 0.0;
}

double TailLaw::sample(Rng& rng) const {
  switch (family_) {
    case Family::two_sided_pareto: {
      const double mag = scale_ * std::pow(rng.uniform_pos(), -1.0 / alpha_);
      return rng.bernoulli(balance_) ? mag : -mag;
    }
    case Family::light_pareto: {
      const double mag = scale_ * std::pow(rng.uniform_pos(), -1.0 / alpha_);
      return rng.bernoulli(0.5) ? mag : -mag;
    }
    case Family::shifted_exponential: {
      const double mag = rng.exponential() / scale_;
      return rng.bernoulli(0.5) ? mag : -mag;
    }
    case Family::degenerate:
      return scale_;
  }
  return 0.0;
}

bool TailLaw::regularly_varying() const {
  return family_ == Family::two_sided_pareto || family_ == Family::light_pareto;
}

JointLawQ JointLawQ::iid_axes(TailLaw marginal) {
  return JointLawQ(Family::iid_axes, marginal, {});
}

JointLawQ JointLawQ::dependent_ray(TailLaw marginal,
                                   std::vector<double> coefficients) {
  if (coefficients.empty())
    throw std::invalid_argument("dependent_ray: coefficient list is empty");
  if (std::abs(coefficients.front() - 1.0) > 1e-12)
    throw std::invalid_argument("dependent_ray: c_1 must equal 1");
  coefficients.front() = 1.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    if (!(coefficients[i] > 0.0))
      throw std::invalid_argument("dependent_ray: coefficients must be > 0");
    if (i > 0 && coefficients[i] > coefficients[i - 1])
      throw std::invalid_argument("dependent_ray: coefficients must be nonincreasing");
  }
  return JointLawQ(Family::dependent_ray, marginal, std::move(coefficients));
}

std::vector<double> JointLawQ::sample_block(int k, Rng& rng) const {
  if (k < 1) throw std::invalid_argument("sample_block: k must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(k));
  if (family_ == Family::iid_axes) {
    for (double& v : out) v = marginal_.sample(rng);
    return out;
  }
  if (static_cast<std::size_t>(k) > coefficients_.size())
    throw std::invalid_argument(
        "sample_block: block larger than the ray coefficient list");
  const double y = marginal_.sample(rng);
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = coefficients_[i] * y;
  return out;
}

double limit_rectangle_mass(const JointLawQ& joint, int g,
                            const std::vector<int>& pattern, double cutoff) {
  if (g < 1) throw std::invalid_argument("limit_rectangle_mass: g must be >= 1");
  if (static_cast<int>(pattern.size()) != g)
    throw std::invalid_argument("limit_rectangle_mass: pattern length != g");
  if (!(cutoff > 0.0))
    throw std::invalid_argument("limit_rectangle_mass: cutoff must be > 0");
  if (!joint.marginal().regularly_varying())
    throw std::invalid_argument("limit_rectangle_mass: marginal not regularly varying");
  const double alpha = joint.marginal().alpha();
  const double beta = joint.marginal().balance();

  int ones = 0;
  for (int b : pattern) {
    if (b != 0 && b != 1)
      throw std::invalid_argument("limit_rectangle_mass: pattern entries in {0,1}");
    ones += b;
  }
  if (ones == 0) return std::numeric_limits<double>::infinity();

  if (joint.family() == JointLawQ::Family::iid_axes)
    return ones == 1 ? beta * std::pow(cutoff, -alpha) : 0.0;

  const auto& c = joint.coefficients();
  if (static_cast<std::size_t>(g) > c.size())
    throw std::invalid_argument("limit_rectangle_mass: g exceeds ray length");
  // The ray point is (c_1 y, ..., c_g y, ...); intersect the per-coordinate
  // constraints on y. Negative y never satisfies a 1-entry.
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g; ++j) {
    const double t = cutoff / c[static_cast<std::size_t>(j)];
    if (pattern[static_cast<std::size_t>(j)] == 1)
      lower = std::max(lower, t);
    else
      upper = std::min(upper, t);
  }
  if (lower >= upper) return 0.0;
  const double upper_mass =
      std::isinf(upper) ? 0.0 : std::pow(upper, -alpha);
  return beta * (std::pow(lower, -alpha) - upper_mass);
}

std::vector<double> DisplacementModel::sample_block(int type, int k, Rng& rng) const {
  if (k < 1) throw std::invalid_argument("sample_block: k must be >= 1");
  if (type < 1 || type > num_types())
    throw std::invalid_argument("sample_block: type out of range");
  if (type == num_types()) return type_q.sample_block(k, rng);
  std::vector<double> out(static_cast<std::size_t>(k));
  const TailLaw& law = dominated[static_cast<std::size_t>(type - 1)];
  for (double& v : out) v = law.sample(rng);
  return out;
}

DisplacementModel make_displacement_model(std::vector<TailLaw> dominated,
                                          JointLawQ type_q, double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("displacement model: gamma must be > 0");
  return DisplacementModel{std::move(dominated), std::move(type_q), gamma};
}

double scaling_bn(double rho, const TailLaw& law_q, int n) {
  if (!(rho > 1.0)) throw std::invalid_argument("scaling_bn: rho must be > 1");
  if (n < 0) throw std::invalid_argument("scaling_bn: n must be >= 0");
  if (!law_q.regularly_varying())
    throw std::invalid_argument(
        "scaling_bn: type-Q law must be regularly varying (Pareto family)");
  return law_q.scale() * std::pow(rho, static_cast<double>(n) / law_q.alpha());
}

RegularVariationReport check_regular_variation(const DisplacementModel& model,
                                               double rho,
                                               const std::vector<int>& n_grid,
                                               const std::vector<double>& x_grid) {
  if (n_grid.empty() || x_grid.empty())
    throw std::invalid_argument("check_regular_variation: empty grid");
  const TailLaw& law_q = model.type_q.marginal();
  const double alpha = law_q.alpha();
  RegularVariationReport report;
  for (int n : n_grid) {
    const double bn = scaling_bn(rho, law_q, n);
    const double rho_n = std::pow(rho, n);
    for (double x : x_grid) {
      const double scaled_tail = rho_n * law_q.tail_complement(bn * x);
      const double limit = std::pow(x, -alpha);
      const double dev = std::abs(scaled_tail - limit);
      report.deviations.push_back({n, x, dev});
      report.max_deviation = std::max(report.max_deviation, dev);
    }
    const double fq = law_q.tail_complement(bn);
    for (int p = 1; p < model.num_types(); ++p) {
      const double fp =
          model.dominated[static_cast<std::size_t>(p - 1)].tail_complement(bn);
      report.ratios.push_back({n, p, fq > 0.0 ? fp / fq : 0.0});
    }
  }
  return report;
}

}  // namespace brw
