// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver. Subcommands map onto the orchestration layer:
//
//   validate     model report (spectral data, assumption checks)
//   simulate     replica sweep -> per-replica CSV + summary JSON
//   limit        limit-process samples, kappa, maximum-law CDF grid
//   maxdist      ECDF of M_n/b_n against the limit law, KS report
//   onejump      one-jump flag rates over an n grid
//   convergence  cut/prune gap study over the configured K and B lists
//   superpose    superposition-stability test
//
// Exit codes: 0 ok, 2 invalid config, 3 population-cap aborts above the
// tolerated fraction, 4 I/O failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "brw/experiments.hpp"
#include "brw/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAborts = 3;
constexpr int kExitIo = 4;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  int threads = brw::default_threads();
};

void write_artifact(const std::filesystem::path& dir, const std::string& name,
                    const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::filesystem::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path.string());
  out << content;
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

brw::ExperimentConfig load(const CliOptions& opts) {
  brw::ExperimentConfig cfg = brw::load_config_file(opts.config_path);
  if (opts.seed_override) {
    cfg.seed = *opts.seed_override;
    cfg.canonical += " seed_override=" + std::to_string(cfg.seed);
    cfg.config_hash = brw::fnv1a64(cfg.canonical);
  }
  if (opts.out_override) cfg.output_dir = *opts.out_override;
  if (const char* env = std::getenv("BRW_OUT_DIR")) cfg.output_dir = env;
  return cfg;
}

int check_aborts(const brw::ExperimentConfig& cfg, int aborted, int total) {
  const double fraction =
      total > 0 ? static_cast<double>(aborted) / static_cast<double>(total) : 0.0;
  if (fraction > cfg.run.abort_tolerance) {
    std::cerr << "population-cap aborts " << aborted << "/" << total
              << " above tolerance " << cfg.run.abort_tolerance << "\n";
    return kExitAborts;
  }
  return kExitOk;
}

int cmd_validate(const CliOptions& opts) {
  const brw::ExperimentConfig cfg = load(opts);
  const std::string report = brw::render_validation_json(cfg);
  write_artifact(cfg.output_dir, "validation.json", report);
  const brw::ValidationReport check = brw::validate_model(cfg.model);
  if (!check.ok()) {
    std::cerr << "model rejected\n";
    return kExitConfig;
  }
  if (cfg.displacement.type_q.marginal().regularly_varying() && check.spectral) {
    std::vector<int> n_grid;
    for (int n = 2; n <= cfg.run.n; n += 2) n_grid.push_back(n);
    const brw::RegularVariationReport rv = brw::check_regular_variation(
        cfg.displacement, check.spectral->rho, n_grid, {0.5, 1.0, 2.0, 4.0});
    write_artifact(cfg.output_dir, "regvar.csv", brw::render_regvar_csv(cfg, rv));
  }
  return kExitOk;
}

int cmd_simulate(const CliOptions& opts) {
  const brw::ExperimentConfig cfg = load(opts);
  const brw::ModelBundle bundle = brw::prepare_bundle(cfg);
  const brw::SimulationOutput out =
      brw::run_simulation(bundle, cfg.run.n, cfg.run.replicas, opts.threads);
  write_artifact(cfg.output_dir, "replicas.csv",
                 brw::render_simulation_csv(cfg, out));
  write_artifact(cfg.output_dir, "summary.json",
                 brw::render_summary_json(cfg, out));
  if (cfg.run.replicas <= 100)  // point dumps only at diagnostic scale
    write_artifact(
        cfg.output_dir, "points.json",
        brw::render_replica_points_json(cfg, cfg.run.n, cfg.run.replicas,
                                        opts.threads));
  return check_aborts(cfg, out.aborted_count, static_cast<int>(out.replicas.size()));
}

int cmd_limit(const CliOptions& opts) {
  const brw::ExperimentConfig cfg = load(opts);
  const brw::ModelBundle bundle = brw::prepare_bundle(cfg);
  const brw::LimitParams params = brw::limit_params_for(bundle, opts.threads);
  const bool keep = cfg.run.limit_samples <= 200;  // point dumps for small runs
  const brw::LimitOutput out = brw::run_limit(bundle, params,
                                              cfg.run.limit_samples, opts.threads,
                                              keep);
  const std::vector<double> grid{0.5, 1.0, 2.0, 4.0, 8.0};
  write_artifact(cfg.output_dir, "limit_cdf.csv",
                 brw::render_limit_cdf_csv(cfg, params, grid));
  if (keep)
    write_artifact(cfg.output_dir, "limit_samples.json",
                   brw::render_limit_samples_json(cfg, out));
  std::cout << "kappa=" << brw::format_double(out.kappa) << "\n";
  return kExitOk;
}

int cmd_maxdist(const CliOptions& opts) {
  const brw::ExperimentConfig cfg = load(opts);
  const brw::ModelBundle bundle = brw::prepare_bundle(cfg);
  const brw::MaxDistResult result = brw::run_maxdist(bundle, opts.threads);
  const brw::LimitParams params =
      brw::limit_params_for(bundle, opts.threads, /*with_table=*/false);
  write_artifact(cfg.output_dir, "maxdist.json",
                 brw::render_maxdist_json(cfg, result, 0.05));
  write_artifact(cfg.output_dir, "maxdist_ecdf.csv",
                 brw::render_ecdf_csv(cfg, result, params));
  return check_aborts(cfg, result.aborted,
                      result.aborted + static_cast<int>(result.samples.size()));
}

int cmd_onejump(const CliOptions& opts) {
  const brw::ExperimentConfig cfg = load(opts);
  const brw::ModelBundle bundle = brw::prepare_bundle(cfg);
  const std::vector<brw::OneJumpRow> rows = brw::run_onejump(
      bundle, cfg.run.n_grid, cfg.run.replicas, 0.1, opts.threads);
  write_artifact(cfg.output_dir, "onejump.csv", brw::render_onejump_csv(cfg, rows));
  int aborted = 0, total = 0;
  for (const auto& row : rows) {
    aborted += row.aborted;
    total += row.replicas;
  }
  return check_aborts(cfg, aborted, total);
}

int cmd_convergence(const CliOptions& opts) {
  const brw::ExperimentConfig cfg = load(opts);
  const brw::ModelBundle bundle = brw::prepare_bundle(cfg);
  const std::vector<brw::ConvergenceRow> rows =
      brw::run_convergence(bundle, cfg.run.n, cfg.run.replicas, opts.threads);
  write_artifact(cfg.output_dir, "convergence.csv",
                 brw::render_convergence_csv(cfg, rows));
  return kExitOk;
}

int cmd_superpose(const CliOptions& opts) {
  const brw::ExperimentConfig cfg = load(opts);
  const brw::ModelBundle bundle = brw::prepare_bundle(cfg);
  const brw::LimitParams params = brw::limit_params_for(bundle, opts.threads);
  const brw::SuperposeResult result =
      brw::run_superpose(bundle, params, cfg.run.limit_samples, opts.threads);
  write_artifact(cfg.output_dir, "superpose.json",
                 brw::render_superpose_json(cfg, result, 0.03));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-type branching random walk toolkit"};
  app.require_subcommand(1);

  CliOptions opts;
  app.add_option("--config", opts.config_path, "experiment config (JSON)")
      ->required();
  app.add_option("--seed", opts.seed_override, "override the config seed");
  app.add_option("--threads", opts.threads, "worker thread count");
  app.add_option("--out", opts.out_override, "output directory override");

  int (*handler)(const CliOptions&) = nullptr;
  app.add_subcommand("validate", "model validation report")
      ->callback([&] { handler = cmd_validate; });
  app.add_subcommand("simulate", "replica sweep")
      ->callback([&] { handler = cmd_simulate; });
  app.add_subcommand("limit", "limit-process sampling")
      ->callback([&] { handler = cmd_limit; });
  app.add_subcommand("maxdist", "maximum law against the limit")
      ->callback([&] { handler = cmd_maxdist; });
  app.add_subcommand("onejump", "one-jump flag rates over the n grid")
      ->callback([&] { handler = cmd_onejump; });
  app.add_subcommand("convergence", "cut/prune gap study")
      ->callback([&] { handler = cmd_convergence; });
  app.add_subcommand("superpose", "superposition stability test")
      ->callback([&] { handler = cmd_superpose; });

  CLI11_PARSE(app, argc, argv);

  try {
    return handler(opts);
  } catch (const brw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
