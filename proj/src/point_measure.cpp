// SPDX-License-Identifier: Apache-2.0

#include "brw/point_measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace brw {

PointMeasure::PointMeasure(std::vector<Atom> atoms) {
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.location))
      throw std::invalid_argument("PointMeasure: non-finite location");
    if (a.multiplicity < 1)
      throw std::invalid_argument("PointMeasure: multiplicity < 1");
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& x, const Atom& y) { return x.location < y.location; });
  atoms_.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && atoms_.back().location == a.location)
      atoms_.back().multiplicity += a.multiplicity;
    else
      atoms_.push_back(a);
    total_mass_ += a.multiplicity;
  }
}

std::int64_t PointMeasure::counts_in(double lo, double hi) const {
  if (!(lo < hi)) throw std::invalid_argument("counts_in: requires lo < hi");
  auto begin = std::upper_bound(
      atoms_.begin(), atoms_.end(), lo,
      [](double v, const Atom& a) { return v < a.location; });
  std::int64_t total = 0;
  for (auto it = begin; it != atoms_.end() && it->location <= hi; ++it)
    total += it->multiplicity;
  return total;
}

double PointMeasure::integrate(const std::function<double(double)>& f) const {
  double s = 0.0;
  for (const Atom& a : atoms_) s += static_cast<double>(a.multiplicity) * f(a.location);
  return s;
}

double PointMeasure::laplace_at(const std::function<double(double)>& f) const {
  return std::exp(-integrate(f));
}

std::vector<double> PointMeasure::order_statistics(std::int64_t k) const {
  if (k < 1) throw std::invalid_argument("order_statistics: requires k >= 1");
  std::vector<double> out;
  for (auto it = atoms_.rbegin(); it != atoms_.rend() && std::ssize(out) < k; ++it) {
    for (std::int64_t i = 0; i < it->multiplicity && std::ssize(out) < k; ++i)
      out.push_back(it->location);
  }
  return out;
}

double PointMeasure::max_location() const {
  if (atoms_.empty()) throw std::logic_error("max_location of empty measure");
  return atoms_.back().location;
}

PointMeasure PointMeasure::scaled(double b) const {
  std::vector<Atom> scaled_atoms = atoms_;
  for (Atom& a : scaled_atoms) a.location *= b;
  return PointMeasure(std::move(scaled_atoms));
}

PointMeasure PointMeasure::merge(const PointMeasure& a, const PointMeasure& b) {
  std::vector<Atom> all = a.atoms_;
  all.insert(all.end(), b.atoms_.begin(), b.atoms_.end());
  return PointMeasure(std::move(all));
}

double HatFunction::operator()(double x) const {
  const double t = (std::abs(x) - zeta) / zeta;
  return height * std::clamp(t, 0.0, 1.0);
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  // Once a sample is exhausted its ECDF sits at 1 and the gap can only
  // shrink, so the sweep above has already seen the supremum.
  return d;
}

double ks_vs_cdf(std::span<const double> samples,
                 const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_vs_cdf: empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double c = cdf(s[i]);
    d = std::max(d, std::abs(c - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
  }
  return d;
}

}  // namespace brw
