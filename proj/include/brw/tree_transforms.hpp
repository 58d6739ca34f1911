// SPDX-License-Identifier: Apache-2.0
//
// Explicitly stored trees and the cutting / pruning / regularization
// transforms used as convergence diagnostics. These run at small depth only;
// the streaming simulator is the scale path.
//
// Conventions: cutting at generation n-K roots one subtree per generation
// (n-K) vertex. A subtree root's own displacement lies on the edge below the
// cut, so only vertices strictly inside a subtree contribute atoms; the
// weight of a vertex is its number of generation-K descendants within the
// subtree (a depth-K vertex counts itself).

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "brw/branching_model.hpp"
#include "brw/displacement_model.hpp"
#include "brw/point_measure.hpp"
#include "brw/rng.hpp"

namespace brw {

struct TreeNode {
  int type = 0;
  double displacement = 0.0;  // 0 for the root
  std::int32_t parent = -1;
  std::int32_t child_begin = 0;
  std::int32_t child_count = 0;
  std::int32_t generation = 0;
};

// Arena-allocated tree in breadth-first order; children of one parent are
// contiguous, grouped by type in birth order. Displacement draws follow the
// exact order of the streaming simulator, so positions match it bitwise.
class ExplicitTree {
 public:
  static ExplicitTree build(const BranchingModel& model,
                            const DisplacementModel& dmodel, int depth,
                            std::int64_t node_cap, Rng& rng);

  int depth() const { return depth_; }
  int heavy_type() const { return heavy_type_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  // Node ids of one generation, in birth order.
  std::vector<std::int32_t> generation_ids(int g) const;

  // Root-to-leaf path sums, one per generation-n vertex, in birth order.
  std::vector<double> leaf_positions() const;

  // Number of generation-n descendants of every node (a leaf counts itself).
  std::vector<std::int64_t> descendant_counts() const;

  PointMeasure extremal_process(double b_n) const;     // N_n
  PointMeasure single_jump_process(double b_n) const;  // full one-jump process

 private:
  int depth_ = 0;
  int heavy_type_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<std::int32_t> gen_begin_;  // nodes_[gen_begin_[g] .. gen_begin_[g+1])
};

struct CutForest {
  int K = 0;
  std::vector<std::int32_t> roots;  // generation n-K node ids
};

// Forest of depth-K subtrees plus the point process restricted to type-Q
// ancestors within K generations of the leaves.
std::pair<CutForest, PointMeasure> cut_forest(const ExplicitTree& tree, int K,
                                              double b_n);

enum class PruneRule { first_in_birth_order, uniform_random_subset };

struct ForestNode {
  int type = 0;
  double displacement = 0.0;
  std::int64_t weight = 0;  // generation-K descendants; 0 for added nodes
  std::int32_t sub_generation = 0;
  bool added = false;  // inserted by regularization
  std::vector<std::int32_t> children;
};

struct WeightedForest {
  int K = 0;
  int B = 0;
  int heavy_type = 0;
  std::vector<ForestNode> nodes;
  std::vector<std::int32_t> roots;

  // Sum of weight * delta at displacement / b_n over strictly-inside type-Q
  // nodes with positive weight.
  PointMeasure point_process(double b_n) const;
};

// Keeps at most B children of each type per node, top-down. The default rule
// keeps the first B in birth order; sibling blocks are exchangeable so the
// law does not depend on the choice, and a uniform random subset is offered
// for sensitivity checks (rng required in that case).
WeightedForest prune_forest(const ExplicitTree& tree, const CutForest& forest,
                            int B,
                            PruneRule rule = PruneRule::first_in_birth_order,
                            Rng* rng = nullptr);

// mu_pq(B) = E[min(#type-q children of a type-p parent, B)] and the
// Perron-Frobenius eigenvalue of that truncated matrix.
std::pair<SquareMatrix, double> truncated_mean_matrix(const BranchingModel& model,
                                                      int B);

// Pads every node to exactly B children per type through generation K;
// added nodes carry weight 0 and freshly drawn displacements, so the induced
// point process is unchanged sample by sample.
WeightedForest regularize_forest(const WeightedForest& pruned,
                                 const DisplacementModel& dmodel, Rng& rng);

}  // namespace brw
