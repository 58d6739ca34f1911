// SPDX-License-Identifier: Apache-2.0

#include "brw/limit_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace brw {

namespace {
constexpr double kTableResidual = 1e-6;
}

WSource WSource::degenerate(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("WSource: value must be > 0");
  WSource s;
  s.samples_ = {value};
  s.max_ = value;
  return s;
}

WSource WSource::empirical(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("WSource: empty sample vector");
  for (double w : samples)
    if (!(w > 0.0)) throw std::invalid_argument("WSource: samples must be > 0");
  WSource s;
  s.max_ = *std::max_element(samples.begin(), samples.end());
  s.samples_ = std::move(samples);
  return s;
}

double WSource::sample(Rng& rng) const {
  if (samples_.size() == 1) return samples_[0];
  return samples_[rng.uniform_below(samples_.size())];
}

double LimitParams::mean_g() const {
  double acc = 0.0;
  for (const auto& [g, p] : g_pmf) acc += g * p;
  return acc;
}

int LimitParams::max_g() const {
  int m = 0;
  for (const auto& [g, p] : g_pmf) m = std::max(m, g);
  return m;
}

double LimitParams::scale_of(double w) const {
  return std::pow(w / (rho - 1.0), 1.0 / alpha);
}

LimitParams make_limit_params(const BranchingModel& model, const JointLawQ& joint,
                              WSource w_source, std::int64_t cap) {
  if (!joint.marginal().regularly_varying())
    throw std::invalid_argument("limit params: type-Q law must be regularly varying");
  const ValidationReport report = validate_model(model);
  if (!report.ok() || !report.spectral)
    throw std::invalid_argument("limit params: model failed validation");
  const SpectralData& spectral = *report.spectral;

  // Geometric residual beyond the table must be below 1e-6.
  int m_max = 0;
  while (std::pow(spectral.rho, -(m_max + 1)) >= kTableResidual) ++m_max;
  if (cap <= 0) {
    const double suggested = 6.0 * std::pow(spectral.rho, m_max);
    cap = static_cast<std::int64_t>(std::min(suggested, 8.0e6));
    cap = std::max<std::int64_t>(cap, 4096);
  }

  LimitParams params{
      spectral.rho,
      joint.marginal().alpha(),
      spectral.sigma,
      joint,
      GenerationLawTable::build(model, m_max, cap),
      {},
      std::move(w_source),
      model,
  };

  std::map<int, double> g_acc;
  for (int q = 1; q <= model.num_types; ++q) {
    const double weight = spectral.sigma[static_cast<std::size_t>(q - 1)];
    for (const auto& [count, prob] :
         model.offspring.marginal_count_pmf(q, model.heavy_type()))
      g_acc[count] += weight * prob;
  }
  params.g_pmf.assign(g_acc.begin(), g_acc.end());

  if (joint.family() == JointLawQ::Family::dependent_ray &&
      params.max_g() > static_cast<int>(joint.coefficients().size()))
    throw std::invalid_argument(
        "limit params: ray coefficient list shorter than the largest cluster size");
  return params;
}

int sample_g(const LimitParams& params, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [g, p] : params.g_pmf) {
    acc += p;
    if (u < acc) return g;
  }
  return params.g_pmf.back().first;
}

namespace {

// Geometric index with P(M = m) = (rho-1) rho^-(m+1), truncated to the table
// range; truncation is valid because the residual is below 1e-6 by
// construction (checked here for tables built by hand).
int sample_geometric_index(const LimitParams& params, Rng& rng) {
  const int m_max = params.table.m_max();
  if (std::pow(params.rho, -(m_max + 1)) >= kTableResidual)
    throw std::runtime_error(
        "sample_t: table too shallow, geometric residual above 1e-6");
  for (;;) {
    const int m = static_cast<int>(std::floor(std::log(rng.uniform_pos()) /
                                              -std::log(params.rho)));
    if (m <= m_max) return m;
  }
}

std::int64_t sample_decoration(const LimitParams& params, int m, Rng& rng) {
  const GenerationPmfRow& row = params.table.row(m);
  if (auto v = row.sample(rng)) return *v;
  // Overflow bucket: draw the exact conditional law by rejection on the
  // plain tree. This branch is entered with probability equal to the
  // overflow mass, so the expected extra work stays bounded.
  if (!params.model)
    throw std::runtime_error(
        "sample_t: overflow bucket drawn but no model for the fallback");
  const int heavy = params.model->heavy_type();
  for (;;) {
    const std::int64_t total =
        simulate_generation_total(*params.model, heavy, m, rng);
    if (total > params.table.cap()) return total;
  }
}

}  // namespace

std::vector<std::int64_t> sample_t(const LimitParams& params, int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("sample_t: count must be >= 1");
  const int m = sample_geometric_index(params, rng);
  std::vector<std::int64_t> out(static_cast<std::size_t>(count));
  for (auto& t : out) t = sample_decoration(params, m, rng);
  return out;
}

std::vector<std::vector<double>> sample_prm(const JointLawQ& joint, double delta,
                                            int g, Rng& rng) {
  if (!(delta > 0.0)) throw std::invalid_argument("sample_prm: delta must be > 0");
  if (g < 1) throw std::invalid_argument("sample_prm: g must be >= 1");
  const TailLaw& marginal = joint.marginal();
  if (!marginal.regularly_varying())
    throw std::invalid_argument("sample_prm: marginal not regularly varying");
  const double alpha = marginal.alpha();
  const double beta = marginal.balance();

  std::vector<std::vector<double>> points;
  if (joint.family() == JointLawQ::Family::iid_axes) {
    const double mass = g * std::pow(delta, -alpha);
    const std::int64_t count = rng.poisson(mass);
    for (std::int64_t i = 0; i < count; ++i) {
      const auto axis = static_cast<std::size_t>(
          rng.uniform_below(static_cast<std::uint64_t>(g)));
      const double mag = delta * std::pow(rng.uniform_pos(), -1.0 / alpha);
      std::vector<double> x(static_cast<std::size_t>(g), 0.0);
      x[axis] = rng.bernoulli(beta) ? mag : -mag;
      points.push_back(std::move(x));
    }
    return points;
  }

  const auto& c = joint.coefficients();
  if (static_cast<std::size_t>(g) > c.size())
    throw std::invalid_argument("sample_prm: g exceeds the ray length");
  const double mass = std::pow(delta, -alpha);  // c_1 = 1
  const std::int64_t count = rng.poisson(mass);
  for (std::int64_t i = 0; i < count; ++i) {
    const double mag = delta * std::pow(rng.uniform_pos(), -1.0 / alpha);
    const double y = rng.bernoulli(beta) ? mag : -mag;
    std::vector<double> x(static_cast<std::size_t>(g));
    for (int j = 0; j < g; ++j) x[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)] * y;
    points.push_back(std::move(x));
  }
  return points;
}

NStarSample sample_n_star(const LimitParams& params, double delta, Rng& rng,
                          bool keep_clusters) {
  if (!(delta > 0.0)) throw std::invalid_argument("sample_n_star: delta must be > 0");
  NStarSample sample;
  sample.w = params.w_source.sample(rng);
  sample.scale = params.scale_of(sample.w);
  sample.support_floor = delta * sample.scale;

  const double alpha = params.alpha;
  const double beta = params.joint.marginal().balance();
  std::vector<PointMeasure::Atom> atoms;

  if (params.joint.family() == JointLawQ::Family::iid_axes) {
    // A limit-measure point on axis i feeds a cluster only when i <= G, so
    // effective clusters arrive at rate E[G] delta^-alpha, with G
    // size-biased and the axis uniform among its first G coordinates. Each
    // such cluster contributes exactly one observable point.
    const double mean_g = params.mean_g();
    const std::int64_t n_clusters =
        rng.poisson(mean_g * std::pow(delta, -alpha));
    // Size-biased cdf over the G pmf.
    for (std::int64_t l = 0; l < n_clusters; ++l) {
      double u = rng.uniform() * mean_g;
      int g = params.g_pmf.back().first;
      double acc = 0.0;
      for (const auto& [gv, p] : params.g_pmf) {
        acc += gv * p;
        if (u < acc) {
          g = gv;
          break;
        }
      }
      const double mag = delta * std::pow(rng.uniform_pos(), -1.0 / alpha);
      const double y = rng.bernoulli(beta) ? mag : -mag;
      const std::int64_t t = sample_t(params, 1, rng)[0];
      atoms.push_back({sample.scale * y, t});
      if (keep_clusters) sample.clusters.push_back({g, {t}, {y}});
    }
  } else {
    const std::int64_t n_clusters = rng.poisson(std::pow(delta, -alpha));
    const auto& c = params.joint.coefficients();
    for (std::int64_t l = 0; l < n_clusters; ++l) {
      const int g = sample_g(params, rng);
      if (static_cast<std::size_t>(g) > c.size())
        throw std::runtime_error("sample_n_star: cluster larger than ray");
      const double mag = delta * std::pow(rng.uniform_pos(), -1.0 / alpha);
      const double y = rng.bernoulli(beta) ? mag : -mag;
      const std::vector<std::int64_t> t = sample_t(params, g, rng);
      ClusterSample cluster;
      cluster.g = g;
      for (int k = 0; k < g; ++k) {
        const double xi = c[static_cast<std::size_t>(k)] * y;
        atoms.push_back({sample.scale * xi, t[static_cast<std::size_t>(k)]});
        if (keep_clusters) {
          cluster.t.push_back(t[static_cast<std::size_t>(k)]);
          cluster.xi.push_back(xi);
        }
      }
      if (keep_clusters) sample.clusters.push_back(std::move(cluster));
    }
  }
  sample.points = PointMeasure(std::move(atoms));
  return sample;
}

double kappa_lambda(const LimitParams& params) {
  double acc = 0.0;
  for (const auto& [g, pg] : params.g_pmf) {
    if (pg <= 0.0) continue;
    double pattern_sum = 0.0;
    std::vector<int> pattern(static_cast<std::size_t>(g), 0);
    // All 2^g - 1 patterns with at least one coordinate above the cutoff.
    for (std::uint64_t bits = 1; bits < (1ULL << g); ++bits) {
      for (int j = 0; j < g; ++j)
        pattern[static_cast<std::size_t>(j)] = (bits >> j) & 1 ? 1 : 0;
      pattern_sum += limit_rectangle_mass(params.joint, g, pattern);
    }
    acc += pg * pattern_sum;
  }
  return acc / (params.rho - 1.0);
}

double limit_max_cdf(const LimitParams& params, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("limit_max_cdf: x must be > 0");
  const double kappa = kappa_lambda(params);
  const double tail = kappa * std::pow(x, -params.alpha);
  double acc = 0.0;
  for (double w : params.w_source.samples()) acc += std::exp(-tail * w);
  return acc / static_cast<double>(params.w_source.samples().size());
}

LaplaceEstimate laplace_functional_limit(const LimitParams& params,
                                         const HatFunction& f,
                                         int inner_samples, Rng& rng) {
  if (!(f.zeta > 0.0))
    throw std::invalid_argument("laplace_functional_limit: support touches 0");
  if (inner_samples < 1)
    throw std::invalid_argument("laplace_functional_limit: needs inner samples");
  if (f.height == 0.0) return {1.0, 0.0};

  const double alpha = params.alpha;
  const double beta = params.joint.marginal().balance();
  const bool iid = params.joint.family() == JointLawQ::Family::iid_axes;
  const auto& c = params.joint.coefficients();

  // Per-parent-type cdf over sigma for the q draw.
  std::vector<double> sigma_cdf(params.sigma.size());
  std::partial_sum(params.sigma.begin(), params.sigma.end(), sigma_cdf.begin());
  sigma_cdf.back() = 1.0;

  // Marginal pmfs of the type-Q child count per parent type.
  if (!params.model)
    throw std::invalid_argument("laplace_functional_limit: params carry no model");
  const BranchingModel& model = *params.model;
  std::vector<CountPmf> u_pmf;
  for (int q = 1; q <= model.num_types; ++q)
    u_pmf.push_back(model.offspring.marginal_count_pmf(q, model.heavy_type()));

  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < inner_samples; ++s) {
    const auto q_idx = rng.categorical_from_cdf(sigma_cdf);
    // Child count U of the heavy type under parent type q.
    const CountPmf& pmf = u_pmf[q_idx];
    double uu = rng.uniform();
    int u_count = pmf.back().first;
    double acc = 0.0;
    for (const auto& [value, prob] : pmf) {
      acc += prob;
      if (uu < acc) {
        u_count = value;
        break;
      }
    }
    const int m = sample_geometric_index(params, rng);
    double term;
    if (iid) {
      // One observable coordinate: axis uniform among the first U, value
      // from the restricted tail; finite mass U * zeta^-alpha.
      const double mass = u_count * std::pow(f.zeta, -alpha);
      const double mag = f.zeta * std::pow(rng.uniform_pos(), -1.0 / alpha);
      const double y = rng.bernoulli(beta) ? mag : -mag;
      const std::int64_t t = sample_decoration(params, m, rng);
      term = mass * (1.0 - std::exp(-static_cast<double>(t) * f(y)));
    } else {
      if (static_cast<std::size_t>(u_count) > c.size())
        throw std::runtime_error("laplace_functional_limit: block exceeds ray");
      const double mass = std::pow(f.zeta, -alpha);
      const double mag = f.zeta * std::pow(rng.uniform_pos(), -1.0 / alpha);
      const double y = rng.bernoulli(beta) ? mag : -mag;
      double exponent = 0.0;
      for (int j = 0; j < u_count; ++j) {
        const std::int64_t t = sample_decoration(params, m, rng);
        exponent += static_cast<double>(t) * f(c[static_cast<std::size_t>(j)] * y);
      }
      term = mass * (1.0 - std::exp(-exponent));
    }
    sum += term;
    sum_sq += term * term;
  }
  const double n = static_cast<double>(inner_samples);
  const double mean_term = sum / n;
  const double var_term = std::max(0.0, sum_sq / n - mean_term * mean_term);
  const double integral = mean_term / (params.rho - 1.0);
  const double integral_se = std::sqrt(var_term / n) / (params.rho - 1.0);

  double value = 0.0, dvalue = 0.0;
  for (double w : params.w_source.samples()) {
    const double e = std::exp(-w * integral);
    value += e;
    dvalue += w * e;
  }
  const double count = static_cast<double>(params.w_source.samples().size());
  value /= count;
  dvalue /= count;
  return {value, dvalue * integral_se};
}

std::pair<std::map<std::int64_t, double>, double> decoration_multiplicity_pmf(
    const LimitParams& params) {
  std::map<std::int64_t, double> pmf;
  double remainder = 0.0;
  const double rho = params.rho;
  for (int m = 0; m <= params.table.m_max(); ++m) {
    const double weight = (rho - 1.0) * std::pow(rho, -(m + 1));
    const GenerationPmfRow& row = params.table.row(m);
    for (std::size_t i = 0; i < row.values.size(); ++i)
      pmf[row.values[i]] += weight * row.pmf[i];
    remainder += weight * row.overflow;
  }
  remainder += std::pow(rho, -(params.table.m_max() + 1));  // beyond the table
  return {std::move(pmf), remainder};
}

}  // namespace brw
