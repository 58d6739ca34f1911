// SPDX-License-Identifier: Apache-2.0

#include "brw/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace brw {

SimThresholds make_thresholds(double rho, double b_n, int n, double eta,
                              double theta, std::int64_t population_cap) {
  if (n < 1) throw std::invalid_argument("thresholds: n must be >= 1");
  if (!(b_n > 0.0)) throw std::invalid_argument("thresholds: b_n must be > 0");
  if (population_cap < 1) throw std::invalid_argument("thresholds: bad cap");
  SimThresholds t;
  t.n = n;
  t.rho = rho;
  t.b_n = b_n;
  t.record_floor = eta * b_n;
  t.one_jump_abs = theta * b_n / static_cast<double>(n);
  t.theta = theta;
  t.population_cap = population_cap;
  return t;
}

GenerationState initial_state(const BranchingModel& model, Rng& rng) {
  GenerationState state;
  state.generation = 0;
  Particle root;
  root.type = model.sample_root_type(rng);
  root.position = 0.0;
  state.particles.push_back(std::move(root));
  state.type_counts.assign(static_cast<std::size_t>(model.num_types), 0);
  state.type_counts[static_cast<std::size_t>(state.particles[0].type - 1)] = 1;
  return state;
}

GenerationState step_generation(const GenerationState& state,
                                const BranchingModel& model,
                                const DisplacementModel& dmodel,
                                const SimThresholds& thresholds, Rng& rng) {
  const int q_count = model.num_types;
  GenerationState next;
  next.generation = state.generation + 1;
  next.type_counts.assign(static_cast<std::size_t>(q_count), 0);
  next.particles.reserve(state.particles.size() * 2);

  for (const Particle& parent : state.particles) {
    const OffspringVector& kids = model.offspring.sample(parent.type, rng);
    for (int q = 1; q <= q_count; ++q) {
      const int k = kids[static_cast<std::size_t>(q - 1)];
      const std::vector<double> block = dmodel.sample_block(q, k, rng);
      for (int i = 0; i < k; ++i) {
        if (static_cast<std::int64_t>(next.particles.size()) >=
            thresholds.population_cap)
          throw PopulationCapExceeded("population cap exceeded at generation " +
                                      std::to_string(next.generation));
        const double x = block[static_cast<std::size_t>(i)];
        Particle child;
        child.type = q;
        child.position = parent.position + x;
        child.heavy_record = parent.heavy_record;
        if (q == q_count && std::abs(x) > thresholds.record_floor)
          child.heavy_record.push_back(x);
        child.jump_counts = parent.jump_counts;
        if (std::abs(x) > thresholds.one_jump_abs) {
          if (child.jump_counts.empty())
            child.jump_counts.assign(static_cast<std::size_t>(q_count), 0);
          ++child.jump_counts[static_cast<std::size_t>(q - 1)];
        }
        next.type_counts[static_cast<std::size_t>(q - 1)] += 1;
        next.particles.push_back(std::move(child));
      }
    }
  }
  return next;
}

ReplicaResult run_replica(const BranchingModel& model,
                          const DisplacementModel& dmodel,
                          const SimThresholds& thresholds, Rng& rng) {
  ReplicaResult result;
  result.n = thresholds.n;
  result.theta = thresholds.theta;
  result.one_jump_flag.assign(static_cast<std::size_t>(model.num_types), false);

  GenerationState state = initial_state(model, rng);
  try {
    for (int g = 0; g < thresholds.n; ++g)
      state = step_generation(state, model, dmodel, thresholds, rng);
  } catch (const PopulationCapExceeded&) {
    result.aborted = true;
    return result;
  }

  const double inv_bn = 1.0 / thresholds.b_n;
  std::vector<PointMeasure::Atom> extremal_atoms;
  std::vector<PointMeasure::Atom> jump_atoms;
  extremal_atoms.reserve(state.particles.size());
  double max_pos = -std::numeric_limits<double>::infinity();
  const int heavy = model.heavy_type();
  for (const Particle& leaf : state.particles) {
    extremal_atoms.push_back({leaf.position * inv_bn, 1});
    max_pos = std::max(max_pos, leaf.position);
    for (double x : leaf.heavy_record) jump_atoms.push_back({x * inv_bn, 1});
    if (!leaf.jump_counts.empty()) {
      for (int p = 1; p < model.num_types; ++p)
        if (leaf.jump_counts[static_cast<std::size_t>(p - 1)] >= 1)
          result.one_jump_flag[static_cast<std::size_t>(p - 1)] = true;
      if (leaf.jump_counts[static_cast<std::size_t>(heavy - 1)] >= 2)
        result.one_jump_flag[static_cast<std::size_t>(heavy - 1)] = true;
    }
  }
  result.extremal = PointMeasure(std::move(extremal_atoms));
  result.single_jump = PointMeasure(std::move(jump_atoms));
  result.max_position = max_pos;
  result.total = result.extremal.total_mass();
  result.w_hat = static_cast<double>(result.total) /
                 std::pow(thresholds.rho, thresholds.n);
  return result;
}

std::vector<double> estimate_w(const BranchingModel& model, double rho,
                               int depth, int reps, Rng& rng,
                               std::optional<int> root_type) {
  if (depth < 1) throw std::invalid_argument("estimate_w: depth must be >= 1");
  if (std::pow(rho, depth) > 1.0e6 + 0.5)
    throw std::invalid_argument("estimate_w: rho^depth exceeds 1e6");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(reps));
  const double norm = std::pow(rho, depth);
  for (int r = 0; r < reps; ++r) {
    const int root = root_type ? *root_type : model.sample_root_type(rng);
    const std::int64_t total = simulate_generation_total(model, root, depth, rng);
    out.push_back(static_cast<double>(total) / norm);
  }
  return out;
}

std::vector<bool> one_jump_events(const ReplicaResult& replica, double theta) {
  if (replica.theta != theta)
    throw std::invalid_argument(
        "one_jump_events: replica was simulated with a different theta");
  return replica.one_jump_flag;
}

}  // namespace brw
