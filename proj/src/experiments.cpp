// SPDX-License-Identifier: Apache-2.0

#include "brw/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "brw/parallel.hpp"

namespace brw {

namespace {
using nlohmann::json;

json provenance(const ExperimentConfig& cfg) {
  json j;
  j["config_hash"] = cfg.config_hash;
  j["seed"] = cfg.seed;
  return j;
}

std::string csv_header(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "# config_hash=" << cfg.config_hash << " seed=" << cfg.seed << "\n";
  return out.str();
}

}  // namespace

double ModelBundle::b_n(int n) const {
  return scaling_bn(spectral.rho, cfg.displacement.type_q.marginal(), n);
}

SimThresholds ModelBundle::thresholds(int n) const {
  return make_thresholds(spectral.rho, b_n(n), n, cfg.run.eta, cfg.run.theta,
                         cfg.run.population_cap);
}

ModelBundle prepare_bundle(const ExperimentConfig& cfg) {
  ValidationReport report = validate_model(cfg.model);
  if (!report.ok() || !report.spectral) {
    std::string detail;
    for (const auto& check : report.checks)
      if (!check.pass) detail += " [" + check.name + ": " + check.detail + "]";
    throw ConfigError("model rejected by validation:" + detail);
  }
  if (cfg.displacement.num_types() != cfg.model.num_types)
    throw ConfigError("displacement block does not match the model type count");
  return ModelBundle{cfg, std::move(*report.spectral)};
}

SimulationOutput run_simulation(const ModelBundle& bundle, int n, int replicas,
                                int threads) {
  const SimThresholds thresholds = bundle.thresholds(n);
  const HatFunction hat{bundle.cfg.run.zeta, bundle.cfg.run.hat_height};
  SimulationOutput out;
  out.n = n;
  out.replicas.resize(static_cast<std::size_t>(replicas));
  parallel_for(replicas, threads, [&](int i) {
    Rng rng = Rng::stream(bundle.cfg.seed, StreamKind::replica,
                          (static_cast<std::uint64_t>(n) << 32) |
                              static_cast<std::uint64_t>(i));
    const ReplicaResult replica =
        run_replica(bundle.cfg.model, bundle.cfg.displacement, thresholds, rng);
    ReplicaStats stats;
    stats.replica = i;
    stats.aborted = replica.aborted;
    if (!replica.aborted) {
      stats.mn_over_bn = replica.max_position / thresholds.b_n;
      stats.w_hat = replica.w_hat;
      stats.total = replica.total;
      stats.flags = replica.one_jump_flag;
      stats.count_above_one =
          replica.extremal.counts_in(1.0, std::numeric_limits<double>::infinity());
      stats.hat_gap = std::abs(replica.extremal.integrate(hat) -
                               replica.single_jump.integrate(hat));
    }
    out.replicas[static_cast<std::size_t>(i)] = std::move(stats);
  });
  for (const auto& r : out.replicas)
    if (r.aborted) ++out.aborted_count;
  return out;
}

std::vector<double> estimate_w_parallel(const BranchingModel& model, double rho,
                                        int depth, int reps, std::uint64_t seed,
                                        int threads,
                                        std::optional<int> root_type) {
  std::vector<double> out(static_cast<std::size_t>(reps));
  const std::uint64_t root_tag =
      root_type ? static_cast<std::uint64_t>(*root_type) << 48 : 0;
  parallel_for(reps, threads, [&](int i) {
    Rng rng = Rng::stream(seed, StreamKind::w_estimate,
                          root_tag | static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] =
        estimate_w(model, rho, depth, 1, rng, root_type)[0];
  });
  return out;
}

LimitParams limit_params_for(const ModelBundle& bundle, int threads,
                             bool with_table) {
  std::vector<double> w_samples = estimate_w_parallel(
      bundle.cfg.model, bundle.spectral.rho, bundle.cfg.run.w_depth,
      bundle.cfg.run.w_reps, bundle.cfg.seed, threads);
  WSource w = WSource::empirical(std::move(w_samples));
  if (with_table)
    return make_limit_params(bundle.cfg.model, bundle.cfg.displacement.type_q,
                             std::move(w), bundle.cfg.run.table_cap);
  // Table-free variant: enough for kappa and the maximum law.
  LimitParams params{
      bundle.spectral.rho,
      bundle.cfg.displacement.type_q.marginal().alpha(),
      bundle.spectral.sigma,
      bundle.cfg.displacement.type_q,
      GenerationLawTable::build(bundle.cfg.model, 0, 1),
      {},
      std::move(w),
      bundle.cfg.model,
  };
  std::map<int, double> g_acc;
  for (int q = 1; q <= bundle.cfg.model.num_types; ++q) {
    const double weight = bundle.spectral.sigma[static_cast<std::size_t>(q - 1)];
    for (const auto& [count, prob] : bundle.cfg.model.offspring.marginal_count_pmf(
             q, bundle.cfg.model.heavy_type()))
      g_acc[count] += weight * prob;
  }
  params.g_pmf.assign(g_acc.begin(), g_acc.end());
  return params;
}

MaxDistResult run_maxdist(const ModelBundle& bundle, int threads) {
  const SimulationOutput sim =
      run_simulation(bundle, bundle.cfg.run.n, bundle.cfg.run.replicas, threads);
  LimitParams params = limit_params_for(bundle, threads, /*with_table=*/false);

  MaxDistResult result;
  result.aborted = sim.aborted_count;
  result.kappa = kappa_lambda(params);
  for (const auto& r : sim.replicas)
    if (!r.aborted) result.samples.push_back(r.mn_over_bn);
  result.ks = ks_vs_cdf(result.samples, [&](double x) {
    return x > 0.0 ? limit_max_cdf(params, x) : 0.0;
  });
  return result;
}

std::vector<OneJumpRow> run_onejump(const ModelBundle& bundle,
                                    const std::vector<int>& n_grid, int replicas,
                                    double gap_epsilon, int threads) {
  std::vector<OneJumpRow> rows;
  for (int n : n_grid) {
    const SimulationOutput sim = run_simulation(bundle, n, replicas, threads);
    OneJumpRow row;
    row.n = n;
    row.replicas = replicas;
    row.aborted = sim.aborted_count;
    row.flag_rate.assign(static_cast<std::size_t>(bundle.cfg.model.num_types), 0.0);
    int survived = 0;
    int gap_hits = 0;
    for (const auto& r : sim.replicas) {
      if (r.aborted) continue;
      ++survived;
      for (std::size_t p = 0; p < r.flags.size(); ++p)
        if (r.flags[p]) row.flag_rate[p] += 1.0;
      if (r.hat_gap > gap_epsilon) ++gap_hits;
    }
    if (survived > 0) {
      for (double& rate : row.flag_rate) rate /= survived;
      row.gap_fraction = static_cast<double>(gap_hits) / survived;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ConvergenceRow> run_convergence(const ModelBundle& bundle, int n,
                                            int trees, int threads) {
  const double b_n = bundle.b_n(n);
  const HatFunction hat{bundle.cfg.run.zeta, bundle.cfg.run.hat_height};
  const std::vector<int>& k_list = bundle.cfg.run.k_list;
  const std::vector<int>& b_list = bundle.cfg.run.b_list;

  // Cell layout: for each K, first the cut-only gap, then one gap per B.
  const std::size_t cells = k_list.size() * (1 + b_list.size());
  std::vector<std::vector<double>> gaps(cells);
  for (auto& g : gaps) g.assign(static_cast<std::size_t>(trees), 0.0);

  parallel_for(trees, threads, [&](int i) {
    Rng rng = Rng::stream(bundle.cfg.seed, StreamKind::explicit_tree,
                          static_cast<std::uint64_t>(i));
    const ExplicitTree tree =
        ExplicitTree::build(bundle.cfg.model, bundle.cfg.displacement, n,
                            bundle.cfg.run.population_cap, rng);
    const PointMeasure full = tree.single_jump_process(b_n);
    const double full_value = full.integrate(hat);
    std::size_t cell = 0;
    for (int K : k_list) {
      auto [forest, cut_pm] = cut_forest(tree, K, b_n);
      const double cut_value = cut_pm.integrate(hat);
      gaps[cell++][static_cast<std::size_t>(i)] = std::abs(full_value - cut_value);
      for (int B : b_list) {
        const WeightedForest pruned = prune_forest(tree, forest, B);
        const double pruned_value = pruned.point_process(b_n).integrate(hat);
        gaps[cell++][static_cast<std::size_t>(i)] =
            std::abs(cut_value - pruned_value);
      }
    }
  });

  std::vector<ConvergenceRow> rows;
  std::size_t cell = 0;
  auto summarize = [&](int K, int B, const std::vector<double>& g) {
    ConvergenceRow row;
    row.n = n;
    row.K = K;
    row.B = B;
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) /
                        static_cast<double>(g.size());
    double var = 0.0;
    for (double v : g) var += (v - mean) * (v - mean);
    var /= std::max<std::size_t>(1, g.size() - 1);
    row.mean_gap = mean;
    row.stderr_gap = std::sqrt(var / static_cast<double>(g.size()));
    return row;
  };
  for (int K : k_list) {
    rows.push_back(summarize(K, 0, gaps[cell++]));
    for (int B : b_list) rows.push_back(summarize(K, B, gaps[cell++]));
  }
  return rows;
}

LimitOutput run_limit(const ModelBundle& bundle, const LimitParams& params,
                      int n_samples, int threads, bool keep_samples) {
  LimitOutput out;
  out.kappa = kappa_lambda(params);
  // Keep the truncation below the smallest statistic threshold (counts above
  // 1) for every plausible scale.
  out.delta_used =
      std::min(bundle.cfg.run.delta, 0.9 / std::max(1e-12, params.max_scale()));
  out.counts_above_one.resize(static_cast<std::size_t>(n_samples));
  if (keep_samples) out.samples.resize(static_cast<std::size_t>(n_samples));
  std::vector<double> floors(static_cast<std::size_t>(n_samples), 0.0);
  parallel_for(n_samples, threads, [&](int i) {
    Rng rng = Rng::stream(bundle.cfg.seed, StreamKind::limit_sample,
                          static_cast<std::uint64_t>(i));
    NStarSample sample = sample_n_star(params, out.delta_used, rng, keep_samples);
    out.counts_above_one[static_cast<std::size_t>(i)] =
        sample.points.counts_in(1.0, std::numeric_limits<double>::infinity());
    floors[static_cast<std::size_t>(i)] = sample.support_floor;
    if (keep_samples) out.samples[static_cast<std::size_t>(i)] = std::move(sample);
  });
  out.support_floor = *std::max_element(floors.begin(), floors.end());
  if (out.support_floor >= 1.0)
    throw std::runtime_error("run_limit: support floor reached the count threshold");
  return out;
}

SuperposeResult run_superpose(const ModelBundle& bundle, const LimitParams& params,
                              int n_samples, int threads) {
  const double alpha = params.alpha;
  const double b = std::pow(0.5, 1.0 / alpha);  // b^alpha + b^alpha = 1
  const double delta =
      std::min(bundle.cfg.run.delta, 0.9 / std::max(1e-12, params.max_scale()));

  std::vector<double> single(static_cast<std::size_t>(n_samples));
  std::vector<double> super(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, threads, [&](int i) {
    Rng rng_a = Rng::stream(bundle.cfg.seed, StreamKind::limit_sample,
                            0x100000000ULL + 3ULL * static_cast<std::uint64_t>(i));
    Rng rng_b = Rng::stream(bundle.cfg.seed, StreamKind::limit_sample,
                            0x100000000ULL + 3ULL * static_cast<std::uint64_t>(i) + 1);
    Rng rng_c = Rng::stream(bundle.cfg.seed, StreamKind::limit_sample,
                            0x100000000ULL + 3ULL * static_cast<std::uint64_t>(i) + 2);
    const PointMeasure lhs = PointMeasure::merge(
        sample_n_star(params, delta, rng_a).points.scaled(b),
        sample_n_star(params, delta, rng_b).points.scaled(b));
    const PointMeasure rhs = sample_n_star(params, delta, rng_c).points;
    const double inf = std::numeric_limits<double>::infinity();
    super[static_cast<std::size_t>(i)] =
        static_cast<double>(lhs.counts_in(1.0, inf));
    single[static_cast<std::size_t>(i)] =
        static_cast<double>(rhs.counts_in(1.0, inf));
  });
  return SuperposeResult{ks_two_sample(super, single), n_samples};
}

// ---- artifact rendering ----

std::string render_validation_json(const ExperimentConfig& cfg) {
  json j = provenance(cfg);
  const ValidationReport report = validate_model(cfg.model);
  j["ok"] = report.ok();
  json checks = json::array();
  for (const auto& check : report.checks) {
    json c;
    c["name"] = check.name;
    c["pass"] = check.pass;
    c["detail"] = check.detail;
    checks.push_back(c);
  }
  j["checks"] = checks;
  if (report.spectral) {
    j["rho"] = report.spectral->rho;
    j["sigma"] = report.spectral->sigma;
    j["theta"] = report.spectral->theta;
    if (cfg.displacement.type_q.marginal().regularly_varying())
      j["b_n"] = scaling_bn(report.spectral->rho,
                            cfg.displacement.type_q.marginal(), cfg.run.n);
  }
  return j.dump(2) + "\n";
}

std::string render_regvar_csv(const ExperimentConfig& cfg,
                              const RegularVariationReport& report) {
  std::ostringstream s;
  s << csv_header(cfg);
  s << "n,x,deviation\n";
  for (const auto& entry : report.deviations)
    s << entry.n << ',' << format_double(entry.x) << ','
      << format_double(entry.deviation) << "\n";
  for (const auto& entry : report.ratios)
    s << "# ratio n=" << entry.n << " type=" << entry.type << " value="
      << format_double(entry.ratio) << "\n";
  return s.str();
}

std::string render_replica_points_json(const ExperimentConfig& cfg, int n,
                                       int replicas, int threads) {
  const ModelBundle bundle = prepare_bundle(cfg);
  const SimThresholds thresholds = bundle.thresholds(n);
  std::vector<ReplicaResult> results(static_cast<std::size_t>(replicas));
  parallel_for(replicas, threads, [&](int i) {
    Rng rng = Rng::stream(cfg.seed, StreamKind::replica,
                          (static_cast<std::uint64_t>(n) << 32) |
                              static_cast<std::uint64_t>(i));
    results[static_cast<std::size_t>(i)] =
        run_replica(cfg.model, cfg.displacement, thresholds, rng);
  });
  json j = provenance(cfg);
  j["n"] = n;
  json reps = json::array();
  for (const auto& r : results) {
    json rj;
    rj["aborted"] = r.aborted;
    auto points = [](const PointMeasure& pm) {
      json arr = json::array();
      for (const auto& atom : pm.atoms()) {
        json a;
        a["x"] = atom.location;
        a["m"] = atom.multiplicity;
        arr.push_back(a);
      }
      return arr;
    };
    rj["extremal"] = points(r.extremal);
    rj["single_jump"] = points(r.single_jump);
    reps.push_back(rj);
  }
  j["replicas"] = reps;
  return j.dump(2) + "\n";
}

std::string render_simulation_csv(const ExperimentConfig& cfg,
                                  const SimulationOutput& out) {
  std::ostringstream s;
  s << csv_header(cfg);
  s << "replica,n,mn_over_bn,w_hat,total,aborted";
  for (int p = 1; p <= cfg.model.num_types; ++p) s << ",flag_" << p;
  s << "\n";
  for (const auto& r : out.replicas) {
    s << r.replica << ',' << out.n << ',' << format_double(r.mn_over_bn) << ','
      << format_double(r.w_hat) << ',' << r.total << ',' << (r.aborted ? 1 : 0);
    for (int p = 0; p < cfg.model.num_types; ++p)
      s << ','
        << (r.aborted ? 0
                      : (p < static_cast<int>(r.flags.size()) && r.flags[p] ? 1 : 0));
    s << "\n";
  }
  return s.str();
}

std::string render_summary_json(const ExperimentConfig& cfg,
                                const SimulationOutput& out) {
  json j = provenance(cfg);
  j["n"] = out.n;
  j["replicas"] = static_cast<int>(out.replicas.size());
  j["aborted"] = out.aborted_count;
  double w_mean = 0.0;
  int survived = 0;
  for (const auto& r : out.replicas)
    if (!r.aborted) {
      w_mean += r.w_hat;
      ++survived;
    }
  j["survived"] = survived;
  j["w_hat_mean"] = survived ? w_mean / survived : 0.0;
  return j.dump(2) + "\n";
}

std::string render_maxdist_json(const ExperimentConfig& cfg,
                                const MaxDistResult& result, double threshold) {
  json j = provenance(cfg);
  j["kappa"] = result.kappa;
  j["ks"] = result.ks;
  j["threshold"] = threshold;
  j["pass"] = result.ks <= threshold;
  j["samples"] = static_cast<int>(result.samples.size());
  j["aborted"] = result.aborted;
  return j.dump(2) + "\n";
}

std::string render_ecdf_csv(const ExperimentConfig& cfg,
                            const MaxDistResult& result,
                            const LimitParams& params) {
  std::vector<double> sorted = result.samples;
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream s;
  s << csv_header(cfg);
  s << "x,ecdf,limit_cdf\n";
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = sorted[i] > 0.0 ? limit_max_cdf(params, sorted[i]) : 0.0;
    s << format_double(sorted[i]) << ','
      << format_double(static_cast<double>(i + 1) / n) << ','
      << format_double(cdf) << "\n";
  }
  return s.str();
}

std::string render_onejump_csv(const ExperimentConfig& cfg,
                               const std::vector<OneJumpRow>& rows) {
  std::ostringstream s;
  s << csv_header(cfg);
  s << "n,replicas,aborted";
  for (int p = 1; p <= cfg.model.num_types; ++p) s << ",flag_rate_" << p;
  s << ",gap_fraction\n";
  for (const auto& row : rows) {
    s << row.n << ',' << row.replicas << ',' << row.aborted;
    for (double r : row.flag_rate) s << ',' << format_double(r);
    s << ',' << format_double(row.gap_fraction) << "\n";
  }
  return s.str();
}

std::string render_convergence_csv(const ExperimentConfig& cfg,
                                   const std::vector<ConvergenceRow>& rows) {
  std::ostringstream s;
  s << csv_header(cfg);
  s << "n,K,B,zeta,height,mean_abs_gap,stderr\n";
  for (const auto& row : rows) {
    s << row.n << ',' << row.K << ',' << row.B << ','
      << format_double(cfg.run.zeta) << ',' << format_double(cfg.run.hat_height)
      << ',' << format_double(row.mean_gap) << ',' << format_double(row.stderr_gap)
      << "\n";
  }
  return s.str();
}

std::string render_limit_cdf_csv(const ExperimentConfig& cfg,
                                 const LimitParams& params,
                                 const std::vector<double>& x_grid) {
  std::ostringstream s;
  s << csv_header(cfg);
  s << "x,cdf\n";
  for (double x : x_grid)
    s << format_double(x) << ',' << format_double(limit_max_cdf(params, x)) << "\n";
  return s.str();
}

std::string render_limit_samples_json(const ExperimentConfig& cfg,
                                      const LimitOutput& out) {
  json j = provenance(cfg);
  j["kappa"] = out.kappa;
  j["delta"] = out.delta_used;
  j["support_floor"] = out.support_floor;
  json samples = json::array();
  for (const auto& sample : out.samples) {
    json sj;
    sj["w"] = sample.w;
    sj["scale"] = sample.scale;
    json pts = json::array();
    for (const auto& atom : sample.points.atoms()) {
      json a;
      a["x"] = atom.location;
      a["m"] = atom.multiplicity;
      pts.push_back(a);
    }
    sj["points"] = pts;
    samples.push_back(sj);
  }
  j["samples"] = samples;
  return j.dump(2) + "\n";
}

std::string render_superpose_json(const ExperimentConfig& cfg,
                                  const SuperposeResult& result,
                                  double threshold) {
  json j = provenance(cfg);
  j["ks"] = result.ks;
  j["samples"] = result.samples;
  j["threshold"] = threshold;
  j["pass"] = result.ks < threshold;
  return j.dump(2) + "\n";
}

}  // namespace brw
