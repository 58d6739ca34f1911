// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "brw/limit_sampler.hpp"

using namespace brw;

namespace {

BranchingModel det2_model() {
  return make_branching_model(1, OffspringLaw::deterministic({{2}}), {1.0});
}

BranchingModel mix_13_model() {
  return make_branching_model(
      1, OffspringLaw::independent_per_type({{CountPmf{{1, 0.5}, {3, 0.5}}}}),
      {1.0});
}

BranchingModel mix_24_model() {
  return make_branching_model(
      1, OffspringLaw::independent_per_type({{CountPmf{{2, 0.5}, {4, 0.5}}}}),
      {1.0});
}

JointLawQ pareto_axes(double alpha = 1.0, double beta = 1.0) {
  return JointLawQ::iid_axes(TailLaw::two_sided_pareto(alpha, beta, 1.0));
}

}  // namespace

TEST_CASE("cluster size sampling") {
  const LimitParams det = make_limit_params(det2_model(), pareto_axes(),
                                            WSource::degenerate(), 1024);
  Rng rng = Rng::stream(71, StreamKind::limit_sample, 0);
  for (int i = 0; i < 50; ++i) CHECK(sample_g(det, rng) == 2);
  CHECK(det.mean_g() == doctest::Approx(2.0));

  // Two types, sigma = (0.5, 0.5); heavy-type offspring 1 from type 1 and 3
  // from type 2, so P(G=1) = P(G=3) = 1/2.
  const BranchingModel duo = make_branching_model(
      2, OffspringLaw::deterministic({{3, 1}, {1, 3}}), {0.5, 0.5});
  const LimitParams dp = make_limit_params(
      duo, JointLawQ::iid_axes(TailLaw::two_sided_pareto(1, 1, 1)),
      WSource::degenerate(), 4096);
  REQUIRE(dp.g_pmf.size() == 2);
  CHECK(dp.g_pmf[0].first == 1);
  CHECK(dp.g_pmf[0].second == doctest::Approx(0.5));
  CHECK(dp.g_pmf[1].first == 3);
  CHECK(dp.g_pmf[1].second == doctest::Approx(0.5));

  std::map<int, double> freq;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i) freq[sample_g(dp, rng)] += 1.0 / reps;
  double tv = 0.5 * (std::abs(freq[1] - 0.5) + std::abs(freq[3] - 0.5));
  CHECK(tv <= 0.01);
}

TEST_CASE("decoration sampling: deterministic doubling model") {
  const LimitParams params = make_limit_params(det2_model(), pareto_axes(),
                                               WSource::degenerate(), 600000);
  // Geometric mixture of point masses: P(T = 2^m) = 2^-(m+1).
  Rng rng = Rng::stream(72, StreamKind::limit_sample, 0);
  std::map<std::int64_t, double> freq;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i)
    freq[sample_t(params, 1, rng)[0]] += 1.0 / reps;
  double tv = 0.0;
  double accounted = 0.0;
  for (int m = 0; m <= 16; ++m) {
    const double expect = std::pow(2.0, -(m + 1));
    tv += std::abs(freq[static_cast<std::int64_t>(1) << m] - expect);
    accounted += expect;
  }
  tv += 1.0 - accounted;  // tail beyond the checked range
  CHECK(tv / 2.0 < 0.01);

  // The shared geometric index makes the two coordinates identical here.
  for (int i = 0; i < 100; ++i) {
    const auto pair = sample_t(params, 2, rng);
    CHECK(pair[0] == pair[1]);
  }
}

TEST_CASE("decoration pairs follow the geometric mixture") {
  const LimitParams params = make_limit_params(mix_13_model(), pareto_axes(),
                                               WSource::degenerate(), 4096);
  // Analytic joint from the exact table rows.
  auto joint_prob = [&](std::int64_t a, std::int64_t b) {
    double acc = 0.0;
    for (int m = 0; m <= params.table.m_max(); ++m)
      acc += std::pow(2.0, -(m + 1)) * params.table.row(m).pmf_at(a) *
             params.table.row(m).pmf_at(b);
    return acc;
  };
  Rng rng = Rng::stream(73, StreamKind::limit_sample, 0);
  const int reps = 200000;
  std::map<std::pair<std::int64_t, std::int64_t>, double> freq;
  for (int i = 0; i < reps; ++i) {
    const auto t = sample_t(params, 2, rng);
    freq[{t[0], t[1]}] += 1.0 / reps;
  }
  for (const auto& [pair, expect] :
       std::vector<std::pair<std::pair<std::int64_t, std::int64_t>, double>>{
           {{1, 1}, joint_prob(1, 1)},
           {{1, 3}, joint_prob(1, 3)},
           {{3, 3}, joint_prob(3, 3)},
           {{1, 5}, joint_prob(1, 5)}}) {
    const double se = std::sqrt(expect * (1.0 - expect) / reps);
    CHECK(std::abs(freq[pair] - expect) < 3.0 * se + 1e-4);
  }
  // Positive unconditional correlation through the shared depth.
  const double p11 = joint_prob(1, 1);
  double h1 = 0.0;
  for (int m = 0; m <= params.table.m_max(); ++m)
    h1 += std::pow(2.0, -(m + 1)) * params.table.row(m).pmf_at(1);
  CHECK(p11 > h1 * h1 + 0.05);
  CHECK(freq[{1, 1}] > h1 * h1 + 0.05);
}

TEST_CASE("restricted limit-measure points") {
  Rng rng = Rng::stream(74, StreamKind::limit_sample, 0);
  const JointLawQ iid = pareto_axes(1.0, 1.0);
  // Mass of {|y| > 1} is 1, so the count is Poisson with mean 1.
  double mean = 0.0;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i) {
    const auto pts = sample_prm(iid, 1.0, 1, rng);
    mean += static_cast<double>(pts.size());
    for (const auto& p : pts) CHECK(std::abs(p[0]) > 1.0);
  }
  mean /= reps;
  CHECK(std::abs(mean - 1.0) < 3.0 / std::sqrt(static_cast<double>(reps)));

  const JointLawQ ray = JointLawQ::dependent_ray(
      TailLaw::two_sided_pareto(1.5, 0.6, 1.0), {1.0, 0.5});
  for (int i = 0; i < 200; ++i) {
    for (const auto& p : sample_prm(ray, 0.3, 2, rng)) {
      CHECK(p[1] == doctest::Approx(0.5 * p[0]).epsilon(1e-15));
      CHECK(std::abs(p[0]) > 0.3);
    }
  }
}

TEST_CASE("void probabilities of the limit process") {
  // Degenerate W: P(no point above x) = exp(-kappa x^-alpha), kappa = 2.
  const LimitParams params = make_limit_params(det2_model(), pareto_axes(),
                                               WSource::degenerate(), 1024);
  CHECK(kappa_lambda(params) == doctest::Approx(2.0));
  const int reps = 20000;
  std::vector<int> voids{0, 0, 0, 0};
  const std::vector<double> grid{0.5, 1.0, 2.0, 4.0};
  for (int i = 0; i < reps; ++i) {
    Rng rng = Rng::stream(75, StreamKind::limit_sample, i);
    const NStarSample sample = sample_n_star(params, 0.05, rng);
    CHECK(sample.support_floor == doctest::Approx(0.05));
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (sample.points.counts_in(grid[k],
                                  std::numeric_limits<double>::infinity()) == 0)
        ++voids[k];
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double expect = std::exp(-2.0 / grid[k]);
    const double p = static_cast<double>(voids[k]) / reps;
    const double se = std::sqrt(expect * (1.0 - expect) / reps);
    CHECK(std::abs(p - expect) < 3.0 * se);
  }
}

TEST_CASE("limit sample structure") {
  const LimitParams params = make_limit_params(mix_13_model(), pareto_axes(),
                                               WSource::degenerate(), 4096);
  Rng rng = Rng::stream(76, StreamKind::limit_sample, 0);
  int clusters_seen = 0;
  for (int i = 0; i < 200; ++i) {
    const NStarSample sample = sample_n_star(params, 0.1, rng, true);
    for (const auto& atom : sample.points.atoms()) CHECK(atom.multiplicity >= 1);
    for (const auto& cluster : sample.clusters) {
      // Axes family: every cluster contributes one observable coordinate.
      CHECK(cluster.t.size() == 1);
      CHECK(cluster.xi.size() == 1);
      ++clusters_seen;
    }
  }
  CHECK(clusters_seen > 1000);
}

TEST_CASE("scaling equivariance of the limit sampler") {
  const double alpha = 1.5;
  const double c = 2.0;
  const JointLawQ joint = pareto_axes(alpha, 0.8);
  const LimitParams base = make_limit_params(mix_13_model(), joint,
                                             WSource::degenerate(1.0), 4096);
  LimitParams scaled = base;
  scaled.w_source = WSource::degenerate(std::pow(c, alpha) * 1.0);
  for (int i = 0; i < 50; ++i) {
    Rng rng_a = Rng::stream(77, StreamKind::limit_sample, i);
    Rng rng_b = Rng::stream(77, StreamKind::limit_sample, i);
    const NStarSample a = sample_n_star(base, 0.1, rng_a);
    const NStarSample b = sample_n_star(scaled, 0.1, rng_b);
    REQUIRE(a.points.atoms().size() == b.points.atoms().size());
    for (std::size_t k = 0; k < a.points.atoms().size(); ++k) {
      CHECK(b.points.atoms()[k].location ==
            doctest::Approx(c * a.points.atoms()[k].location).epsilon(1e-12));
      CHECK(b.points.atoms()[k].multiplicity == a.points.atoms()[k].multiplicity);
    }
  }
}

TEST_CASE("kappa closed forms and the generic pattern sum") {
  // Single type, rho 2, E[G] 2, beta 1, axes: kappa = 2.
  const LimitParams a = make_limit_params(det2_model(), pareto_axes(),
                                          WSource::degenerate(), 1024);
  CHECK(kappa_lambda(a) == doctest::Approx(2.0).epsilon(1e-12));

  // beta = 0: no mass on the positive side.
  const LimitParams b = make_limit_params(det2_model(), pareto_axes(1.0, 0.0),
                                          WSource::degenerate(), 1024);
  CHECK(kappa_lambda(b) == doctest::Approx(0.0));

  // Dependent ray with c_1 = 1: kappa = beta / (rho - 1), independent of G.
  const BranchingModel duo = make_branching_model(
      2, OffspringLaw::deterministic({{3, 1}, {1, 3}}), {0.5, 0.5});
  const JointLawQ ray = JointLawQ::dependent_ray(
      TailLaw::two_sided_pareto(2.0, 0.7, 1.0), {1.0, 0.5, 0.25});
  const LimitParams c = make_limit_params(duo, ray, WSource::degenerate(), 4096);
  CHECK(kappa_lambda(c) == doctest::Approx(0.7 / 3.0).epsilon(1e-12));

  // Two-type axes family against the closed form (rho-1)^{-1} beta E[G].
  const LimitParams d = make_limit_params(
      duo, JointLawQ::iid_axes(TailLaw::two_sided_pareto(2.0, 0.7, 1.0)),
      WSource::degenerate(), 4096);
  CHECK(kappa_lambda(d) == doctest::Approx(0.7 * 2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("limit maximum cdf") {
  const LimitParams params = make_limit_params(det2_model(), pareto_axes(),
                                               WSource::degenerate(), 1024);
  CHECK(limit_max_cdf(params, 2.0) == doctest::Approx(std::exp(-1.0)));
  double prev = 0.0;
  for (double x : {0.1, 0.5, 1.0, 4.0, 16.0, 1e4}) {
    const double v = limit_max_cdf(params, x);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev > 0.999);
  CHECK(limit_max_cdf(params, 1e-9) < 1e-100);
  CHECK_THROWS_AS(limit_max_cdf(params, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(limit_max_cdf(params, -1.0), std::invalid_argument);
}

TEST_CASE("laplace functional: zero test function") {
  const LimitParams params = make_limit_params(det2_model(), pareto_axes(),
                                               WSource::degenerate(), 1024);
  Rng rng = Rng::stream(78, StreamKind::laplace_mc, 0);
  const LaplaceEstimate est =
      laplace_functional_limit(params, HatFunction{0.5, 0.0}, 10, rng);
  CHECK(est.value == 1.0);
  CHECK(est.stderr_value == 0.0);
}

TEST_CASE("laplace functional closed form for the trivial decoration") {
  // Single-child tree (every generation total is 1), rho forced to 2 via a
  // hand-assembled parameter set: the functional reduces to the Poisson
  // formula exp(-(rho-1)^{-1} integral (1 - e^-f) d nu restricted to |y|>zeta).
  const BranchingModel chain =
      make_branching_model(1, OffspringLaw::deterministic({{1}}), {1.0});
  LimitParams params{
      2.0,
      1.0,
      {1.0},
      pareto_axes(1.0, 1.0),
      GenerationLawTable::build(chain, 20, 64),
      {{1, 1.0}},
      WSource::degenerate(),
      chain,
  };
  const HatFunction f{0.5, 1.0};

  // Quadrature oracle for the ramp part of the hat function.
  const double zeta = f.zeta, a = f.height;
  const int steps = 200000;
  double ramp = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double y0 = zeta + zeta * i / steps;
    const double y1 = zeta + zeta * (i + 1) / steps;
    const double mid = 0.5 * (y0 + y1);
    auto integrand = [&](double y) {
      return (1.0 - std::exp(-a * (y - zeta) / zeta)) / (y * y);
    };
    ramp += (y1 - y0) / 6.0 *
            (integrand(y0) + 4.0 * integrand(mid) + integrand(y1));
  }
  const double tail = (1.0 - std::exp(-a)) / (2.0 * zeta);
  const double expected = std::exp(-(ramp + tail) / (2.0 - 1.0));

  Rng rng = Rng::stream(79, StreamKind::laplace_mc, 0);
  const LaplaceEstimate est = laplace_functional_limit(params, f, 400000, rng);
  CHECK(std::abs(est.value - expected) < 3.0 * est.stderr_value + 1e-3);
}

TEST_CASE("laplace functional agrees with the sampled limit process") {
  const BranchingModel model = mix_24_model();
  const LimitParams params =
      make_limit_params(model, pareto_axes(), WSource::degenerate(), 300000);
  const HatFunction f{0.5, 1.0};
  Rng rng = Rng::stream(80, StreamKind::laplace_mc, 1);
  const LaplaceEstimate analytic = laplace_functional_limit(params, f, 200000, rng);

  const int reps = 4000;
  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < reps; ++i) {
    Rng rs = Rng::stream(80, StreamKind::limit_sample, i);
    const double v = sample_n_star(params, 0.05, rs).points.laplace_at(f);
    mean += v;
    sq += v * v;
  }
  mean /= reps;
  const double se_emp = std::sqrt((sq / reps - mean * mean) / reps);
  const double combined = std::sqrt(se_emp * se_emp +
                                    analytic.stderr_value * analytic.stderr_value);
  CHECK(std::abs(mean - analytic.value) < 3.0 * combined + 1e-3);
}

TEST_CASE("decoration pmf mixture") {
  const LimitParams params = make_limit_params(mix_24_model(), pareto_axes(),
                                               WSource::degenerate(), 50000);
  auto [pmf, remainder] = decoration_multiplicity_pmf(params);
  CHECK(remainder < 1e-3);
  double total = remainder;
  for (const auto& [v, p] : pmf) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  Rng rng = Rng::stream(81, StreamKind::limit_sample, 0);
  std::map<std::int64_t, double> freq;
  const int reps = 30000;
  for (int i = 0; i < reps; ++i) freq[sample_t(params, 1, rng)[0]] += 1.0 / reps;
  double tv = 0.0;
  for (const auto& [v, p] : freq) {
    auto it = pmf.find(v);
    tv += std::abs(p - (it == pmf.end() ? 0.0 : it->second));
  }
  for (const auto& [v, p] : pmf)
    if (!freq.count(v)) tv += p;
  CHECK(tv / 2.0 < 0.03);
}

TEST_CASE("parameter validation") {
  // Ray coefficients shorter than the largest cluster size.
  CHECK_THROWS_AS(
      make_limit_params(mix_24_model(),
                        JointLawQ::dependent_ray(
                            TailLaw::two_sided_pareto(1, 1, 1), {1.0, 0.5, 0.25}),
                        WSource::degenerate(), 4096),
      std::invalid_argument);
  // Light-tailed heavy-type law.
  CHECK_THROWS_AS(
      make_limit_params(det2_model(),
                        JointLawQ::iid_axes(TailLaw::shifted_exponential(1.0)),
                        WSource::degenerate(), 1024),
      std::invalid_argument);
  // Subcritical model.
  CHECK_THROWS_AS(
      make_limit_params(
          make_branching_model(1, OffspringLaw::deterministic({{1}}), {1.0}),
          pareto_axes(), WSource::degenerate(), 64),
      std::invalid_argument);
  CHECK_THROWS_AS(WSource::empirical({1.0, -2.0}), std::invalid_argument);
  CHECK_THROWS_AS(WSource::empirical({}), std::invalid_argument);
}
