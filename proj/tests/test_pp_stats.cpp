// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "brw/point_measure.hpp"
#include "brw/rng.hpp"

using namespace brw;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

PointMeasure random_measure(Rng& rng, int max_atoms) {
  std::vector<PointMeasure::Atom> atoms;
  const int n = 1 + static_cast<int>(rng.uniform_below(max_atoms));
  for (int i = 0; i < n; ++i)
    atoms.push_back({rng.uniform() * 10.0 - 5.0,
                     1 + static_cast<std::int64_t>(rng.uniform_below(4))});
  return PointMeasure(std::move(atoms));
}
}  // namespace

TEST_CASE("counts_in basics") {
  CHECK(PointMeasure{}.counts_in(1.0, kInf) == 0);
  PointMeasure pm({{2.0, 3}});
  CHECK(pm.counts_in(1.0, kInf) == 3);
  PointMeasure boundary({{1.0, 1}});
  CHECK(boundary.counts_in(1.0, kInf) == 0);  // half-open (lo, hi]
  CHECK(boundary.counts_in(0.5, 1.0) == 1);
  CHECK_THROWS_AS(pm.counts_in(2.0, 2.0), std::invalid_argument);
}

TEST_CASE("laplace functional at hat functions") {
  const HatFunction f{0.5, 1.0};
  CHECK(PointMeasure{}.laplace_at(f) == doctest::Approx(1.0));
  PointMeasure pm({{1.0, 1}});  // |x| = 2 zeta -> f = height
  CHECK(pm.laplace_at(f) == doctest::Approx(std::exp(-1.0)));
  CHECK(f(0.4) == 0.0);
  CHECK(f(0.5) == 0.0);
  CHECK(f(-2.0) == doctest::Approx(1.0));
  CHECK(f(0.75) == doctest::Approx(0.5));
}

TEST_CASE("laplace of merged measures is the product of laplaces") {
  Rng rng = Rng::stream(7, StreamKind::generic, 0);
  const HatFunction f{0.3, 0.7};
  for (int trial = 0; trial < 200; ++trial) {
    const PointMeasure a = random_measure(rng, 6);
    const PointMeasure b = random_measure(rng, 6);
    const PointMeasure merged = PointMeasure::merge(a, b);
    CHECK(merged.laplace_at(f) ==
          doctest::Approx(a.laplace_at(f) * b.laplace_at(f)).epsilon(1e-12));
    CHECK(merged.total_mass() == a.total_mass() + b.total_mass());
  }
}

TEST_CASE("construction order does not matter") {
  PointMeasure a({{1.0, 1}, {-2.0, 2}, {1.0, 3}});
  PointMeasure b({{-2.0, 2}, {1.0, 4}});
  REQUIRE(a.atoms().size() == b.atoms().size());
  for (std::size_t i = 0; i < a.atoms().size(); ++i) {
    CHECK(a.atoms()[i].location == b.atoms()[i].location);
    CHECK(a.atoms()[i].multiplicity == b.atoms()[i].multiplicity);
  }
}

TEST_CASE("scaling operator identity on counts") {
  Rng rng = Rng::stream(11, StreamKind::generic, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const PointMeasure pm = random_measure(rng, 8);
    const double b = 0.25 + rng.uniform() * 4.0;
    const PointMeasure scaled = pm.scaled(b);
    for (double x : {-2.0, -0.5, 0.1, 1.0, 3.0})
      CHECK(scaled.counts_in(x * b, kInf) == pm.counts_in(x, kInf));
  }
}

TEST_CASE("order statistics") {
  PointMeasure pm({{5.0, 2}, {3.0, 1}});
  const std::vector<double> top = pm.order_statistics(3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == 5.0);
  CHECK(top[1] == 5.0);
  CHECK(top[2] == 3.0);
  CHECK(PointMeasure{}.order_statistics(2).empty());
  CHECK(pm.order_statistics(1)[0] == pm.max_location());
  CHECK(pm.order_statistics(10).size() == 3);  // total mass < k
}

TEST_CASE("two-sample KS statistic") {
  std::vector<double> a{1.0, 2.0, 3.0};
  CHECK(ks_two_sample(a, a) == doctest::Approx(0.0));
  std::vector<double> zero{0.0}, one{1.0};
  CHECK(ks_two_sample(zero, one) == doctest::Approx(1.0));

  // Same continuous law on both sides: D is near the 1.63 sqrt(2/n) critical
  // value with probability ~0.99.
  Rng rng = Rng::stream(13, StreamKind::generic, 0);
  std::vector<double> x(10000), y(10000);
  for (auto& v : x) v = rng.uniform();
  for (auto& v : y) v = rng.uniform();
  CHECK(ks_two_sample(x, y) < 0.023);
}

TEST_CASE("two-sample KS handles heavy ties") {
  std::vector<double> a{0, 0, 0, 1, 1};
  std::vector<double> b{0, 0, 1, 1, 1};
  // ECDFs after the tie runs: at 0: 3/5 vs 2/5; at 1: 1 vs 1.
  CHECK(ks_two_sample(a, b) == doctest::Approx(0.2));
}

TEST_CASE("one-sample KS statistic") {
  // Samples exactly at the quantiles (i + 0.5)/n of the target.
  const int n = 1000;
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) q[i] = (i + 0.5) / n;
  CHECK(ks_vs_cdf(q, [](double x) { return x; }) <= 1.0 / n + 1e-12);

  Rng rng = Rng::stream(17, StreamKind::generic, 0);
  std::vector<double> u(10000);
  for (auto& v : u) v = rng.uniform();
  CHECK(ks_vs_cdf(u, [](double x) { return std::clamp(x, 0.0, 1.0); }) < 0.023);

  CHECK(ks_vs_cdf(q, [](double) { return 0.0; }) == doctest::Approx(1.0));
}

TEST_CASE("integrate matches laplace") {
  Rng rng = Rng::stream(19, StreamKind::generic, 0);
  const HatFunction f{0.4, 1.3};
  for (int trial = 0; trial < 50; ++trial) {
    const PointMeasure pm = random_measure(rng, 5);
    CHECK(pm.laplace_at(f) == doctest::Approx(std::exp(-pm.integrate(f))));
  }
}

TEST_CASE("point measure rejects bad atoms") {
  CHECK_THROWS_AS(PointMeasure({{std::nan(""), 1}}), std::invalid_argument);
  CHECK_THROWS_AS(PointMeasure({{1.0, 0}}), std::invalid_argument);
}
