// SPDX-License-Identifier: Apache-2.0

#include "brw/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace brw {

namespace {

using nlohmann::json;

TailLaw parse_tail_law(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "two_sided_pareto")
    return TailLaw::two_sided_pareto(j.at("alpha").get<double>(),
                                     j.at("balance").get<double>(),
                                     j.at("scale").get<double>());
  if (family == "shifted_exponential")
    return TailLaw::shifted_exponential(j.at("rate").get<double>());
  if (family == "light_pareto")
    return TailLaw::light_pareto(j.at("index").get<double>(),
                                 j.at("scale").get<double>());
  if (family == "degenerate")
    return TailLaw::degenerate(j.at("value").get<double>());
  throw ConfigError("unknown tail law family: " + family);
}

CountPmf parse_count_pmf(const json& j) {
  CountPmf pmf;
  for (const auto& [key, value] : j.items())
    pmf.emplace_back(std::stoi(key), value.get<double>());
  std::sort(pmf.begin(), pmf.end());
  return pmf;
}

OffspringLaw parse_offspring(const json& j, int q) {
  const std::string family = j.at("family").get<std::string>();
  const json& per_type = j.at("per_type");
  if (static_cast<int>(per_type.size()) != q)
    throw ConfigError("offspring per_type must have one entry per parent type");
  if (family == "deterministic") {
    std::vector<OffspringVector> vectors;
    for (const auto& row : per_type)
      vectors.push_back(row.get<OffspringVector>());
    return OffspringLaw::deterministic(std::move(vectors));
  }
  if (family == "independent_per_type") {
    std::vector<std::vector<CountPmf>> per_parent;
    for (const auto& row : per_type) {
      std::vector<CountPmf> pmfs;
      for (const auto& cell : row) pmfs.push_back(parse_count_pmf(cell));
      per_parent.push_back(std::move(pmfs));
    }
    return OffspringLaw::independent_per_type(std::move(per_parent));
  }
  if (family == "explicit_table") {
    std::vector<std::vector<OffspringAtom>> tables;
    for (const auto& row : per_type) {
      std::vector<OffspringAtom> atoms;
      for (const auto& cell : row)
        atoms.push_back({cell.at("counts").get<OffspringVector>(),
                         cell.at("probability").get<double>()});
      tables.push_back(std::move(atoms));
    }
    return OffspringLaw::explicit_table(std::move(tables));
  }
  throw ConfigError("unknown offspring family: " + family);
}

JointLawQ parse_joint(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  TailLaw marginal = parse_tail_law(j.at("marginal"));
  if (family == "iid_axes") return JointLawQ::iid_axes(marginal);
  if (family == "dependent_ray")
    return JointLawQ::dependent_ray(marginal,
                                    j.at("coefficients").get<std::vector<double>>());
  throw ConfigError("unknown joint law family: " + family);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    const json& jm = j.at("model");
    const int q = jm.at("types").get<int>();
    BranchingModel model = make_branching_model(
        q, parse_offspring(jm.at("offspring"), q),
        jm.at("root_distribution").get<std::vector<double>>());

    const json& jd = j.at("displacement");
    std::vector<TailLaw> dominated;
    if (jd.contains("dominated"))
      for (const auto& cell : jd.at("dominated"))
        dominated.push_back(parse_tail_law(cell));
    if (static_cast<int>(dominated.size()) != q - 1)
      throw ConfigError("displacement.dominated must list Q-1 laws");
    DisplacementModel displacement = make_displacement_model(
        std::move(dominated), parse_joint(jd.at("type_q")),
        jd.at("gamma").get<double>());

    RunSettings run;
    if (j.contains("run")) {
      const json& jr = j.at("run");
      read_if(jr, "n", run.n);
      read_if(jr, "replicas", run.replicas);
      read_if(jr, "delta", run.delta);
      read_if(jr, "zeta", run.zeta);
      read_if(jr, "theta", run.theta);
      read_if(jr, "eta", run.eta);
      read_if(jr, "hat_height", run.hat_height);
      read_if(jr, "k_list", run.k_list);
      read_if(jr, "b_list", run.b_list);
      read_if(jr, "n_grid", run.n_grid);
      read_if(jr, "population_cap", run.population_cap);
      read_if(jr, "w_depth", run.w_depth);
      read_if(jr, "w_reps", run.w_reps);
      read_if(jr, "limit_samples", run.limit_samples);
      read_if(jr, "table_cap", run.table_cap);
      read_if(jr, "abort_tolerance", run.abort_tolerance);
    }
    if (run.n < 1 || run.replicas < 1)
      throw ConfigError("run.n and run.replicas must be positive");
    if (!(run.theta > 0.0) || !(run.theta < run.zeta / 2.0))
      throw ConfigError("run.theta must lie in (0, zeta/2)");
    if (!(run.eta > 0.0) || run.eta > run.zeta)
      throw ConfigError("run.eta must lie in (0, zeta]");

    if (!j.contains("seed"))
      throw ConfigError("config must carry an explicit seed");

    ExperimentConfig cfg{std::move(model), std::move(displacement), run,
                         j.at("seed").get<std::uint64_t>(),
                         j.value("output_dir", std::string("out")),
                         "", 0};
    cfg.canonical = j.dump();  // nlohmann keeps keys sorted
    cfg.config_hash = fnv1a64(cfg.canonical);
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace brw
