// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "brw/tree_transforms.hpp"

using namespace brw;

namespace {

BranchingModel single_type_13() {
  return make_branching_model(
      1, OffspringLaw::independent_per_type({{CountPmf{{1, 0.5}, {3, 0.5}}}}),
      {1.0});
}

DisplacementModel pareto_solo() {
  return make_displacement_model(
      {}, JointLawQ::iid_axes(TailLaw::two_sided_pareto(1.0, 1.0, 1.0)), 1.0);
}

// Multiset inclusion of weighted atoms (locations compared exactly).
bool included_in(const PointMeasure& small, const PointMeasure& big) {
  std::map<double, std::int64_t> mass;
  for (const auto& atom : big.atoms()) mass[atom.location] += atom.multiplicity;
  for (const auto& atom : small.atoms()) {
    auto it = mass.find(atom.location);
    if (it == mass.end() || it->second < atom.multiplicity) return false;
  }
  return true;
}

bool same_measure(const PointMeasure& a, const PointMeasure& b) {
  return included_in(a, b) && included_in(b, a);
}

}  // namespace

TEST_CASE("cut at K=n reproduces the full single-jump process") {
  Rng rng = Rng::stream(51, StreamKind::explicit_tree, 0);
  const ExplicitTree tree =
      ExplicitTree::build(single_type_13(), pareto_solo(), 6, 100000, rng);
  auto [forest, pm] = cut_forest(tree, 6, 64.0);
  CHECK(same_measure(pm, tree.single_jump_process(64.0)));
  CHECK(forest.roots.size() == 1);  // generation 0
}

TEST_CASE("cut at K=1 keeps only leaf displacements") {
  Rng rng = Rng::stream(52, StreamKind::explicit_tree, 0);
  const ExplicitTree tree =
      ExplicitTree::build(single_type_13(), pareto_solo(), 5, 100000, rng);
  auto [forest, pm] = cut_forest(tree, 1, 32.0);
  std::vector<PointMeasure::Atom> expected;
  for (std::int32_t id : tree.generation_ids(5))
    expected.push_back(
        {tree.nodes()[static_cast<std::size_t>(id)].displacement / 32.0, 1});
  CHECK(same_measure(pm, PointMeasure(std::move(expected))));
  CHECK(static_cast<int>(forest.roots.size()) ==
        static_cast<int>(tree.generation_ids(4).size()));
}

TEST_CASE("binary deterministic tree, n=4, K=2: descendant multiplicities") {
  const BranchingModel det2 =
      make_branching_model(1, OffspringLaw::deterministic({{2}}), {1.0});
  Rng rng = Rng::stream(53, StreamKind::explicit_tree, 0);
  const ExplicitTree tree = ExplicitTree::build(det2, pareto_solo(), 4, 1000, rng);
  auto [forest, pm] = cut_forest(tree, 2, 16.0);
  // Generation-3 displacements carry weight 2 (their two leaves), the
  // generation-4 ones weight 1; generations 1-2 are below the cut.
  std::map<double, std::int64_t> expected;
  for (std::int32_t id : tree.generation_ids(3))
    expected[tree.nodes()[static_cast<std::size_t>(id)].displacement / 16.0] += 2;
  for (std::int32_t id : tree.generation_ids(4))
    expected[tree.nodes()[static_cast<std::size_t>(id)].displacement / 16.0] += 1;
  std::int64_t total = 0;
  for (const auto& atom : pm.atoms()) {
    CHECK(expected.at(atom.location) == atom.multiplicity);
    total += atom.multiplicity;
  }
  CHECK(total == 8 * 2 + 16 * 1 - 0);  // 8 gen-3 nodes x2, 16 gen-4 nodes x1
}

TEST_CASE("pruning with B >= k_max is vacuous") {
  Rng rng = Rng::stream(54, StreamKind::explicit_tree, 0);
  const ExplicitTree tree =
      ExplicitTree::build(single_type_13(), pareto_solo(), 6, 100000, rng);
  auto [forest, cut_pm] = cut_forest(tree, 4, 64.0);
  const WeightedForest pruned = prune_forest(tree, forest, 3);
  CHECK(same_measure(pruned.point_process(64.0), cut_pm));
}

TEST_CASE("ternary deterministic tree pruned to B=2") {
  const BranchingModel det3 =
      make_branching_model(1, OffspringLaw::deterministic({{3}}), {1.0});
  Rng rng = Rng::stream(55, StreamKind::explicit_tree, 0);
  const ExplicitTree tree = ExplicitTree::build(det3, pareto_solo(), 4, 10000, rng);
  auto [forest, cut_pm] = cut_forest(tree, 2, 16.0);
  const WeightedForest pruned = prune_forest(tree, forest, 2);
  // Each subtree root keeps 2 children, each child keeps 2 children.
  for (std::int32_t root : pruned.roots)
    CHECK(pruned.nodes[static_cast<std::size_t>(root)].children.size() == 2);
  for (const ForestNode& node : pruned.nodes) {
    if (node.sub_generation == 0)
      CHECK(node.weight == 4);
    else if (node.sub_generation == 1)
      CHECK(node.weight == 2);
    else
      CHECK(node.weight == 1);
  }
}

TEST_CASE("pruning to B=1 in a single-type tree leaves paths") {
  Rng rng = Rng::stream(56, StreamKind::explicit_tree, 0);
  const ExplicitTree tree =
      ExplicitTree::build(single_type_13(), pareto_solo(), 6, 100000, rng);
  auto [forest, cut_pm] = cut_forest(tree, 3, 64.0);
  const WeightedForest pruned = prune_forest(tree, forest, 1);
  for (const ForestNode& node : pruned.nodes) {
    CHECK(node.children.size() <= 1);
    CHECK(node.weight == 1);
  }
}

TEST_CASE("truncated mean matrix") {
  const BranchingModel mix = single_type_13();
  {
    auto [m, rho] = truncated_mean_matrix(mix, 3);
    CHECK(m(0, 0) == doctest::Approx(2.0));
    CHECK(rho == doctest::Approx(2.0));
  }
  {
    auto [m, rho] = truncated_mean_matrix(mix, 2);
    CHECK(m(0, 0) == doctest::Approx(1.5));
    CHECK(rho == doctest::Approx(1.5));
  }
  const BranchingModel duo = make_branching_model(
      2, OffspringLaw::deterministic({{2, 1}, {1, 2}}), {0.5, 0.5});
  auto [m1, rho1] = truncated_mean_matrix(duo, 1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(m1(i, j) == doctest::Approx(1.0));
  CHECK(rho1 == doctest::Approx(2.0));  // all-ones Q x Q has eigenvalue Q

  // Monotone in B, reaching rho at k_max.
  double prev = 0.0;
  for (int b = 1; b <= 3; ++b) {
    auto [m, rho] = truncated_mean_matrix(mix, b);
    CHECK(rho >= prev - 1e-12);
    prev = rho;
  }
  CHECK(prev == doctest::Approx(2.0));
}

TEST_CASE("regularization pads with zero weight and keeps the measure") {
  const BranchingModel mix = single_type_13();
  const DisplacementModel dmodel = pareto_solo();
  Rng rng = Rng::stream(57, StreamKind::explicit_tree, 0);
  const ExplicitTree tree = ExplicitTree::build(mix, dmodel, 6, 100000, rng);
  auto [forest, cut_pm] = cut_forest(tree, 3, 64.0);
  const int B = 3;
  const WeightedForest pruned = prune_forest(tree, forest, B);
  Rng rng_reg = Rng::stream(57, StreamKind::transform, 0);
  const WeightedForest full = regularize_forest(pruned, dmodel, rng_reg);

  CHECK(same_measure(full.point_process(64.0), pruned.point_process(64.0)));
  for (const ForestNode& node : full.nodes) {
    if (node.added) CHECK(node.weight == 0);
    if (node.sub_generation < full.K)
      CHECK(static_cast<int>(node.children.size()) == B);  // Q = 1
  }
  // Every subtree is now the full (QB)-ary tree of depth K.
  std::size_t expected = 0;
  for (int m = 1; m <= full.K; ++m)
    expected += static_cast<std::size_t>(std::pow(1 * B, m));
  const std::size_t nodes_per_subtree = full.nodes.size() / full.roots.size();
  CHECK(full.nodes.size() % full.roots.size() == 0);
  CHECK(nodes_per_subtree == expected + 1);

  // Regularizing an already-full forest changes nothing.
  const WeightedForest again = regularize_forest(full, dmodel, rng_reg);
  CHECK(again.nodes.size() == full.nodes.size());
}

TEST_CASE("sandwich: pruned within cut within full, pathwise monotone gaps") {
  const BranchingModel mix = single_type_13();
  const DisplacementModel dmodel = pareto_solo();
  const double b_n = 256.0;
  const HatFunction hat{0.5, 1.0};
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng = Rng::stream(58, StreamKind::explicit_tree, trial);
    const ExplicitTree tree = ExplicitTree::build(mix, dmodel, 8, 100000, rng);
    const PointMeasure full = tree.single_jump_process(b_n);
    const double full_value = full.integrate(hat);

    double prev_cut_gap = std::numeric_limits<double>::infinity();
    for (int K : {2, 4, 6, 8}) {
      auto [forest, cut_pm] = cut_forest(tree, K, b_n);
      CHECK(included_in(cut_pm, full));
      const double cut_gap = full_value - cut_pm.integrate(hat);
      CHECK(cut_gap >= -1e-12);
      CHECK(cut_gap <= prev_cut_gap + 1e-12);
      prev_cut_gap = cut_gap;

      double prev_prune_gap = std::numeric_limits<double>::infinity();
      for (int B : {1, 2, 3}) {
        const WeightedForest pruned = prune_forest(tree, forest, B);
        const PointMeasure pm = pruned.point_process(b_n);
        CHECK(included_in(pm, cut_pm));
        const double gap = cut_pm.integrate(hat) - pm.integrate(hat);
        CHECK(gap >= -1e-12);
        CHECK(gap <= prev_prune_gap + 1e-12);
        prev_prune_gap = gap;
      }
      CHECK(prev_prune_gap == doctest::Approx(0.0));  // B = k_max is vacuous
    }
    CHECK(prev_cut_gap == doctest::Approx(0.0));  // K = n is vacuous
  }
}

TEST_CASE("uniform-subset prune rule keeps the right counts") {
  const BranchingModel det3 =
      make_branching_model(1, OffspringLaw::deterministic({{3}}), {1.0});
  Rng rng = Rng::stream(59, StreamKind::explicit_tree, 0);
  const ExplicitTree tree = ExplicitTree::build(det3, pareto_solo(), 3, 1000, rng);
  auto [forest, cut_pm] = cut_forest(tree, 2, 8.0);
  Rng prng = Rng::stream(59, StreamKind::transform, 0);
  const WeightedForest pruned =
      prune_forest(tree, forest, 2, PruneRule::uniform_random_subset, &prng);
  for (const ForestNode& node : pruned.nodes)
    if (node.sub_generation < 2) CHECK(node.children.size() == 2);
  CHECK_THROWS_AS(
      prune_forest(tree, forest, 2, PruneRule::uniform_random_subset, nullptr),
      std::invalid_argument);
}

TEST_CASE("expected leaf own-jump count above b_n is one") {
  // Mean of the K=1 cut process mass in (1, inf): E|D_n| F(b_n) = 1 exactly
  // for the unit-scale positive Pareto family.
  const BranchingModel mix = single_type_13();
  const DisplacementModel dmodel = pareto_solo();
  const int n = 10;
  const double b_n = std::pow(2.0, n);
  const int reps = 10000;
  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < reps; ++i) {
    Rng rng = Rng::stream(60, StreamKind::explicit_tree, i);
    const ExplicitTree tree = ExplicitTree::build(mix, dmodel, n, 2000000, rng);
    auto [forest, pm] = cut_forest(tree, 1, b_n);
    const double count = static_cast<double>(
        pm.counts_in(1.0, std::numeric_limits<double>::infinity()));
    mean += count;
    sq += count * count;
  }
  mean /= reps;
  const double var = sq / reps - mean * mean;
  const double se = std::sqrt(var / reps);
  CHECK(std::abs(mean - 1.0) < 3.0 * se);
  CHECK(std::abs(mean - 1.0) < 0.1);  // within 10 percent
}
