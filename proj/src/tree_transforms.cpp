// SPDX-License-Identifier: Apache-2.0

#include "brw/tree_transforms.hpp"

#include "brw/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace brw {

ExplicitTree ExplicitTree::build(const BranchingModel& model,
                                 const DisplacementModel& dmodel, int depth,
                                 std::int64_t node_cap, Rng& rng) {
  if (depth < 1) throw std::invalid_argument("explicit tree: depth must be >= 1");
  ExplicitTree tree;
  tree.depth_ = depth;
  tree.heavy_type_ = model.heavy_type();

  TreeNode root;
  root.type = model.sample_root_type(rng);
  tree.nodes_.push_back(root);
  tree.gen_begin_ = {0, 1};

  std::size_t begin = 0, end = 1;
  for (int g = 1; g <= depth; ++g) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const int parent_type = tree.nodes_[idx].type;
      const OffspringVector& kids = model.offspring.sample(parent_type, rng);
      tree.nodes_[idx].child_begin = static_cast<std::int32_t>(tree.nodes_.size());
      std::int32_t produced = 0;
      for (int q = 1; q <= model.num_types; ++q) {
        const int k = kids[static_cast<std::size_t>(q - 1)];
        const std::vector<double> block = dmodel.sample_block(q, k, rng);
        for (int i = 0; i < k; ++i) {
          if (static_cast<std::int64_t>(tree.nodes_.size()) >= node_cap)
            throw PopulationCapExceeded("explicit tree node cap exceeded");
          TreeNode child;
          child.type = q;
          child.displacement = block[static_cast<std::size_t>(i)];
          child.parent = static_cast<std::int32_t>(idx);
          child.generation = g;
          tree.nodes_.push_back(child);
          ++produced;
        }
      }
      tree.nodes_[idx].child_count = produced;
    }
    begin = end;
    end = tree.nodes_.size();
    tree.gen_begin_.push_back(static_cast<std::int32_t>(end));
  }
  return tree;
}

std::vector<std::int32_t> ExplicitTree::generation_ids(int g) const {
  if (g < 0 || g > depth_)
    throw std::invalid_argument("generation_ids: generation out of range");
  std::vector<std::int32_t> out;
  for (std::int32_t i = gen_begin_[static_cast<std::size_t>(g)];
       i < gen_begin_[static_cast<std::size_t>(g) + 1]; ++i)
    out.push_back(i);
  return out;
}

std::vector<double> ExplicitTree::leaf_positions() const {
  std::vector<double> pos(nodes_.size(), 0.0);
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    pos[i] = pos[static_cast<std::size_t>(nodes_[i].parent)] + nodes_[i].displacement;
  std::vector<double> out;
  for (std::int32_t id : generation_ids(depth_))
    out.push_back(pos[static_cast<std::size_t>(id)]);
  return out;
}

std::vector<std::int64_t> ExplicitTree::descendant_counts() const {
  std::vector<std::int64_t> count(nodes_.size(), 0);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const TreeNode& node = nodes_[i];
    if (node.generation == depth_) {
      count[i] = 1;
    } else {
      std::int64_t acc = 0;
      for (std::int32_t c = node.child_begin; c < node.child_begin + node.child_count;
           ++c)
        acc += count[static_cast<std::size_t>(c)];
      count[i] = acc;
    }
  }
  return count;
}

PointMeasure ExplicitTree::extremal_process(double b_n) const {
  std::vector<PointMeasure::Atom> atoms;
  for (double s : leaf_positions()) atoms.push_back({s / b_n, 1});
  return PointMeasure(std::move(atoms));
}

PointMeasure ExplicitTree::single_jump_process(double b_n) const {
  const std::vector<std::int64_t> weight = descendant_counts();
  std::vector<PointMeasure::Atom> atoms;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].type != heavy_type_) continue;
    atoms.push_back({nodes_[i].displacement / b_n, weight[i]});
  }
  return PointMeasure(std::move(atoms));
}

std::pair<CutForest, PointMeasure> cut_forest(const ExplicitTree& tree, int K,
                                              double b_n) {
  if (K < 1 || K > tree.depth())
    throw std::invalid_argument("cut_forest: K out of range");
  CutForest forest;
  forest.K = K;
  forest.roots = tree.generation_ids(tree.depth() - K);

  const std::vector<std::int64_t> weight = tree.descendant_counts();
  const int cut_gen = tree.depth() - K;
  std::vector<PointMeasure::Atom> atoms;
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const TreeNode& node = tree.nodes()[i];
    if (node.generation <= cut_gen || node.type != tree.heavy_type()) continue;
    atoms.push_back({node.displacement / b_n, weight[i]});
  }
  return {std::move(forest), PointMeasure(std::move(atoms))};
}

PointMeasure WeightedForest::point_process(double b_n) const {
  std::vector<PointMeasure::Atom> atoms;
  for (const ForestNode& node : nodes) {
    if (node.sub_generation < 1 || node.type != heavy_type || node.weight < 1)
      continue;
    atoms.push_back({node.displacement / b_n, node.weight});
  }
  return PointMeasure(std::move(atoms));
}

namespace {

// Children of one node grouped into per-type contiguous runs; they were
// appended type by type in birth order.
struct TypeRun {
  std::int32_t begin;
  std::int32_t count;
};

std::vector<TypeRun> type_runs(const ExplicitTree& tree, std::int32_t node_id,
                               int q_count) {
  const TreeNode& node = tree.nodes()[static_cast<std::size_t>(node_id)];
  std::vector<TypeRun> runs(static_cast<std::size_t>(q_count), {0, 0});
  std::int32_t c = node.child_begin;
  const std::int32_t end = node.child_begin + node.child_count;
  while (c < end) {
    const int t = tree.nodes()[static_cast<std::size_t>(c)].type;
    if (runs[static_cast<std::size_t>(t - 1)].count == 0)
      runs[static_cast<std::size_t>(t - 1)].begin = c;
    ++runs[static_cast<std::size_t>(t - 1)].count;
    ++c;
  }
  return runs;
}

// Indices (relative to a run) of the children kept under the rule.
std::vector<std::int32_t> kept_indices(std::int32_t run_count, int b,
                                       PruneRule rule, Rng* rng) {
  const std::int32_t keep = std::min<std::int32_t>(run_count, b);
  std::vector<std::int32_t> out;
  if (rule == PruneRule::first_in_birth_order || keep == run_count) {
    for (std::int32_t i = 0; i < keep; ++i) out.push_back(i);
    return out;
  }
  if (!rng)
    throw std::invalid_argument("prune_forest: uniform subset rule needs an rng");
  std::vector<std::int32_t> pool(static_cast<std::size_t>(run_count));
  for (std::int32_t i = 0; i < run_count; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (std::int32_t i = 0; i < keep; ++i) {
    const auto j = i + static_cast<std::int32_t>(rng->uniform_below(
                           static_cast<std::uint64_t>(run_count - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  out.assign(pool.begin(), pool.begin() + keep);
  std::sort(out.begin(), out.end());  // keep birth order among the survivors
  return out;
}

}  // namespace

WeightedForest prune_forest(const ExplicitTree& tree, const CutForest& forest,
                            int B, PruneRule rule, Rng* rng) {
  if (B < 1) throw std::invalid_argument("prune_forest: B must be >= 1");
  const int q_count =
      tree.nodes().empty() ? 0 : tree.heavy_type();  // heavy type == Q

  WeightedForest out;
  out.K = forest.K;
  out.B = B;
  out.heavy_type = tree.heavy_type();

  // Pairs of (original id, new id) pending child expansion.
  std::vector<std::pair<std::int32_t, std::int32_t>> queue;
  for (std::int32_t root_id : forest.roots) {
    ForestNode node;
    node.type = tree.nodes()[static_cast<std::size_t>(root_id)].type;
    node.displacement =
        tree.nodes()[static_cast<std::size_t>(root_id)].displacement;
    node.sub_generation = 0;
    out.roots.push_back(static_cast<std::int32_t>(out.nodes.size()));
    queue.emplace_back(root_id, static_cast<std::int32_t>(out.nodes.size()));
    out.nodes.push_back(std::move(node));
  }

  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const auto [orig_id, new_id] = queue[qi];
    const std::int32_t sub_gen = out.nodes[static_cast<std::size_t>(new_id)].sub_generation;
    if (sub_gen >= forest.K) continue;
    const auto runs = type_runs(tree, orig_id, q_count);
    for (int q = 1; q <= q_count; ++q) {
      const TypeRun& run = runs[static_cast<std::size_t>(q - 1)];
      for (std::int32_t rel : kept_indices(run.count, B, rule, rng)) {
        const std::int32_t child_orig = run.begin + rel;
        ForestNode child;
        child.type = q;
        child.displacement =
            tree.nodes()[static_cast<std::size_t>(child_orig)].displacement;
        child.sub_generation = sub_gen + 1;
        const auto child_new = static_cast<std::int32_t>(out.nodes.size());
        out.nodes[static_cast<std::size_t>(new_id)].children.push_back(child_new);
        queue.emplace_back(child_orig, child_new);
        out.nodes.push_back(std::move(child));
      }
    }
  }

  // Weights: depth-K nodes count themselves; parents sum their children.
  // Children always follow their parent in the arena, so sweep in reverse.
  for (std::size_t i = out.nodes.size(); i-- > 0;) {
    ForestNode& node = out.nodes[i];
    if (node.sub_generation == forest.K) {
      node.weight = 1;
    } else {
      std::int64_t acc = 0;
      for (std::int32_t c : node.children)
        acc += out.nodes[static_cast<std::size_t>(c)].weight;
      node.weight = acc;
    }
  }
  return out;
}

std::pair<SquareMatrix, double> truncated_mean_matrix(const BranchingModel& model,
                                                      int B) {
  if (B < 1) throw std::invalid_argument("truncated_mean_matrix: B must be >= 1");
  SquareMatrix m(model.num_types);
  for (int p = 1; p <= model.num_types; ++p)
    for (const auto& atom : model.offspring.table(p))
      for (int q = 1; q <= model.num_types; ++q)
        m(p - 1, q - 1) += atom.probability *
                           std::min(atom.counts[static_cast<std::size_t>(q - 1)], B);
  const SpectralData spectral = perron_frobenius(m);
  return {std::move(m), spectral.rho};
}

WeightedForest regularize_forest(const WeightedForest& pruned,
                                 const DisplacementModel& dmodel, Rng& rng) {
  constexpr std::size_t kNodeGuard = 10'000'000;
  WeightedForest out = pruned;
  const int q_count = out.heavy_type;
  const int b = out.B;
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    if (out.nodes[i].sub_generation >= out.K) continue;
    std::vector<int> have(static_cast<std::size_t>(q_count), 0);
    for (std::int32_t c : out.nodes[i].children)
      ++have[static_cast<std::size_t>(out.nodes[static_cast<std::size_t>(c)].type - 1)];
    for (int q = 1; q <= q_count; ++q) {
      const int missing = b - have[static_cast<std::size_t>(q - 1)];
      if (missing <= 0) continue;
      // Fresh full-size block; the trailing coordinates go to the new nodes.
      const std::vector<double> block = dmodel.sample_block(q, b, rng);
      for (int j = 0; j < missing; ++j) {
        if (out.nodes.size() >= kNodeGuard)
          throw std::runtime_error("regularize_forest: node guard exceeded");
        ForestNode child;
        child.type = q;
        child.displacement =
            block[static_cast<std::size_t>(b - missing + j)];
        child.weight = 0;
        child.added = true;
        child.sub_generation = out.nodes[i].sub_generation + 1;
        out.nodes[i].children.push_back(static_cast<std::int32_t>(out.nodes.size()));
        out.nodes.push_back(std::move(child));
      }
    }
  }
  return out;
}

}  // namespace brw
