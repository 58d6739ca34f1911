// SPDX-License-Identifier: Apache-2.0

#include "brw/branching_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

#include "pmf_conv.hpp"

namespace brw {

namespace {

constexpr double kProbTol = 1e-12;

void validate_table(const std::vector<std::vector<OffspringAtom>>& tables) {
  if (tables.empty()) throw std::invalid_argument("offspring law: no parent types");
  const std::size_t q = tables.size();
  for (const auto& atoms : tables) {
    if (atoms.empty())
      throw std::invalid_argument("offspring law: empty support for a parent type");
    double total = 0.0;
    for (const auto& atom : atoms) {
      if (atom.counts.size() != q)
        throw std::invalid_argument("offspring law: count vector length != Q");
      for (int k : atom.counts)
        if (k < 0) throw std::invalid_argument("offspring law: negative count");
      if (!(atom.probability > 0.0))
        throw std::invalid_argument("offspring law: non-positive probability");
      total += atom.probability;
    }
    if (std::abs(total - 1.0) > kProbTol)
      throw std::invalid_argument("offspring law: probabilities do not sum to 1");
  }
}

}  // namespace

OffspringLaw::OffspringLaw(OffspringFamily family,
                           std::vector<std::vector<OffspringAtom>> tables)
    : family_(family), tables_(std::move(tables)) {
  validate_table(tables_);
  cdfs_.resize(tables_.size());
  for (std::size_t p = 0; p < tables_.size(); ++p) {
    double acc = 0.0;
    cdfs_[p].reserve(tables_[p].size());
    for (const auto& atom : tables_[p]) {
      acc += atom.probability;
      cdfs_[p].push_back(acc);
      for (int k : atom.counts) k_max_ = std::max(k_max_, k);
    }
    cdfs_[p].back() = 1.0;
  }
}

OffspringLaw OffspringLaw::deterministic(std::vector<OffspringVector> per_parent) {
  std::vector<std::vector<OffspringAtom>> tables;
  tables.reserve(per_parent.size());
  for (auto& v : per_parent) tables.push_back({OffspringAtom{std::move(v), 1.0}});
  return OffspringLaw(OffspringFamily::deterministic, std::move(tables));
}

OffspringLaw OffspringLaw::independent_per_type(
    std::vector<std::vector<CountPmf>> per_parent) {
  const std::size_t q = per_parent.size();
  std::vector<std::vector<OffspringAtom>> tables(q);
  for (std::size_t p = 0; p < q; ++p) {
    if (per_parent[p].size() != q)
      throw std::invalid_argument("independent_per_type: needs one pmf per child type");
    std::vector<OffspringAtom> atoms{{OffspringVector{}, 1.0}};
    for (const CountPmf& pmf : per_parent[p]) {
      if (pmf.empty())
        throw std::invalid_argument("independent_per_type: empty child pmf");
      std::vector<OffspringAtom> expanded;
      expanded.reserve(atoms.size() * pmf.size());
      for (const auto& atom : atoms) {
        for (const auto& [value, prob] : pmf) {
          OffspringVector counts = atom.counts;
          counts.push_back(value);
          expanded.push_back({std::move(counts), atom.probability * prob});
        }
      }
      atoms = std::move(expanded);
    }
    tables[p] = std::move(atoms);
  }
  return OffspringLaw(OffspringFamily::independent_per_type, std::move(tables));
}

OffspringLaw OffspringLaw::explicit_table(
    std::vector<std::vector<OffspringAtom>> per_parent) {
  return OffspringLaw(OffspringFamily::explicit_table, std::move(per_parent));
}

const std::vector<OffspringAtom>& OffspringLaw::table(int parent_type) const {
  return tables_.at(static_cast<std::size_t>(parent_type - 1));
}

CountPmf OffspringLaw::marginal_count_pmf(int parent_type, int child_type) const {
  std::map<int, double> acc;
  for (const auto& atom : table(parent_type))
    acc[atom.counts[static_cast<std::size_t>(child_type - 1)]] += atom.probability;
  return CountPmf(acc.begin(), acc.end());
}

const OffspringVector& OffspringLaw::sample(int parent_type, Rng& rng) const {
  const auto& cdf = cdfs_[static_cast<std::size_t>(parent_type - 1)];
  const std::size_t idx = rng.categorical_from_cdf(cdf);
  return tables_[static_cast<std::size_t>(parent_type - 1)][idx].counts;
}

int BranchingModel::sample_root_type(Rng& rng) const {
  double u = rng.uniform();
  double acc = 0.0;
  for (int p = 1; p <= num_types; ++p) {
    acc += root_distribution[static_cast<std::size_t>(p - 1)];
    if (u < acc) return p;
  }
  return num_types;
}

BranchingModel make_branching_model(int num_types, OffspringLaw offspring,
                                    std::vector<double> root_distribution) {
  if (num_types < 1) throw std::invalid_argument("model: Q must be >= 1");
  if (offspring.num_types() != num_types)
    throw std::invalid_argument("model: offspring law has wrong type count");
  if (static_cast<int>(root_distribution.size()) != num_types)
    throw std::invalid_argument("model: root distribution has wrong length");
  double total = 0.0;
  for (double p : root_distribution) {
    if (p < 0.0) throw std::invalid_argument("model: negative root probability");
    total += p;
  }
  if (std::abs(total - 1.0) > kProbTol)
    throw std::invalid_argument("model: root distribution does not sum to 1");
  return BranchingModel{num_types, std::move(offspring), std::move(root_distribution)};
}

SquareMatrix SquareMatrix::multiply(const SquareMatrix& rhs) const {
  SquareMatrix out(n_);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) {
      const double v = (*this)(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < n_; ++j) out(i, j) += v * rhs(k, j);
    }
  return out;
}

SquareMatrix SquareMatrix::power(int k) const {
  SquareMatrix out(n_);
  for (int i = 0; i < n_; ++i) out(i, i) = 1.0;
  SquareMatrix base = *this;
  while (k > 0) {
    if (k & 1) out = out.multiply(base);
    base = base.multiply(base);
    k >>= 1;
  }
  return out;
}

SquareMatrix mean_matrix(const BranchingModel& model) {
  SquareMatrix m(model.num_types);
  for (int p = 1; p <= model.num_types; ++p)
    for (const auto& atom : model.offspring.table(p))
      for (int q = 1; q <= model.num_types; ++q)
        m(p - 1, q - 1) +=
            atom.probability * atom.counts[static_cast<std::size_t>(q - 1)];
  return m;
}

namespace {

// One power-iteration run; returns (eigenvalue, unit-sum positive vector).
std::pair<double, std::vector<double>> dominant_pair(const SquareMatrix& m,
                                                     bool transpose, double tol) {
  const int n = m.size();
  std::vector<double> x(static_cast<std::size_t>(n), 1.0 / n);
  std::vector<double> y(static_cast<std::size_t>(n));
  double lambda = 0.0;
  constexpr int kMaxIter = 100000;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double ysum = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += (transpose ? m(j, i) : m(i, j)) * x[j];
      y[i] = acc;
      ysum += acc;
    }
    const double lambda_new = ysum;  // x is kept normalized to sum 1
    for (int i = 0; i < n; ++i) y[i] /= ysum;
    // Residual-based stop so the eigenvector is as converged as the value.
    double resid = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += (transpose ? m(j, i) : m(i, j)) * y[j];
      resid = std::max(resid, std::abs(acc - lambda_new * y[i]));
      scale = std::max(scale, std::abs(acc));
    }
    x.swap(y);
    if (std::abs(lambda_new - lambda) < tol * std::max(1.0, lambda_new) &&
        resid <= tol * std::max(1.0, scale)) {
      return {lambda_new, x};
    }
    lambda = lambda_new;
  }
  throw std::runtime_error("perron_frobenius: power iteration did not converge");
}

}  // namespace

SpectralData perron_frobenius(const SquareMatrix& m, double tol) {
  if (m.size() < 1) throw std::invalid_argument("perron_frobenius: empty matrix");
  if (!(tol > 0.0)) throw std::invalid_argument("perron_frobenius: tol must be > 0");
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j)
      if (m(i, j) < 0.0)
        throw std::invalid_argument("perron_frobenius: negative matrix entry");

  auto [rho, theta] = dominant_pair(m, /*transpose=*/false, tol);
  auto [rho_left, sigma] = dominant_pair(m, /*transpose=*/true, tol);
  (void)rho_left;

  // sigma . 1 = 1 already holds; rescale theta so sigma . theta = 1.
  double dot = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) dot += sigma[i] * theta[i];
  for (double& t : theta) t /= dot;

  return SpectralData{m, rho, std::move(sigma), std::move(theta)};
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck& c) { return c.pass; });
}

ValidationReport validate_model(const BranchingModel& model) {
  ValidationReport report;

  bool no_leaf = true;
  double xlogx = 0.0;
  for (int p = 1; p <= model.num_types; ++p) {
    for (const auto& atom : model.offspring.table(p)) {
      std::int64_t total = 0;
      for (int k : atom.counts) {
        if (k < 1) no_leaf = false;
        total += k;
      }
      if (total > 0)
        xlogx = std::max(xlogx, static_cast<double>(total) *
                                    std::log(static_cast<double>(total)));
    }
  }
  report.checks.push_back(
      {"no_leaf", no_leaf,
       no_leaf ? "all offspring counts >= 1" : "support contains a zero count"});
  report.checks.push_back(
      {"xlogx_finite", true, "max k log k over support = " + std::to_string(xlogx)});

  const SquareMatrix m = mean_matrix(model);
  bool positive = true;
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j)
      if (m(i, j) < 1.0) positive = false;
  report.checks.push_back({"positively_regular", positive,
                           positive ? "all mean-matrix entries >= 1"
                                    : "a mean-matrix entry is < 1"});

  try {
    SpectralData spectral = perron_frobenius(m);
    const bool supercritical = spectral.rho > 1.0 + 1e-9;
    report.checks.push_back({"supercritical", supercritical,
                             "rho = " + std::to_string(spectral.rho)});
    report.spectral = std::move(spectral);
  } catch (const std::exception& e) {
    report.checks.push_back({"supercritical", false, e.what()});
  }
  return report;
}

double GenerationPmfRow::pmf_at(std::int64_t value) const {
  auto it = std::lower_bound(values.begin(), values.end(), value);
  if (it == values.end() || *it != value) return 0.0;
  return pmf[static_cast<std::size_t>(it - values.begin())];
}

std::optional<std::int64_t> GenerationPmfRow::sample(Rng& rng) const {
  const double u = rng.uniform();
  if (values.empty() || u >= retained_mass()) return std::nullopt;
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return values[static_cast<std::size_t>(it - cdf.begin())];
}

namespace {

using detail::DensePmf;

GenerationPmfRow compact_row(const DensePmf& dense) {
  GenerationPmfRow row;
  double acc = 0.0;
  for (std::size_t v = 0; v < dense.size(); ++v) {
    if (dense[v] <= 0.0) continue;
    row.values.push_back(static_cast<std::int64_t>(v));
    row.pmf.push_back(dense[v]);
    acc += dense[v];
    row.cdf.push_back(acc);
  }
  row.overflow = std::max(0.0, 1.0 - acc);
  return row;
}

// One generation of the total-population recursion for every root type:
// next[p] = sum over offspring atoms k of prob(k) * conv_q cur[q]^{*k_q},
// truncated to cap_len. Truncation is closed: every subtree total is >= 1,
// so any combination with a truncated factor lands past the cap as well.
std::vector<DensePmf> step_total_laws(const OffspringLaw& law,
                                      const std::vector<DensePmf>& cur,
                                      std::size_t cap_len) {
  const int q_count = law.num_types();
  std::size_t full = 1;
  for (int p = 1; p <= q_count; ++p) {
    for (const auto& atom : law.table(p)) {
      std::size_t len = 1;
      for (int q = 1; q <= q_count; ++q)
        len += static_cast<std::size_t>(atom.counts[q - 1]) *
               (cur[static_cast<std::size_t>(q - 1)].size() - 1);
      full = std::max(full, len);
    }
  }
  const std::size_t out_len = std::min(full, cap_len);
  std::vector<DensePmf> next(static_cast<std::size_t>(q_count));

  if (full <= 8192) {
    // Direct path: cached per-type convolution powers.
    std::vector<std::vector<DensePmf>> powers(static_cast<std::size_t>(q_count));
    for (int q = 0; q < q_count; ++q) {
      powers[q].resize(static_cast<std::size_t>(law.max_count()) + 1);
      powers[q][0] = DensePmf{1.0};
      for (int j = 1; j <= law.max_count(); ++j)
        powers[q][j] = detail::convolve(powers[q][j - 1], cur[q], out_len);
    }
    for (int p = 0; p < q_count; ++p) {
      DensePmf acc(out_len, 0.0);
      for (const auto& atom : law.table(p + 1)) {
        DensePmf part{1.0};
        for (int q = 0; q < q_count; ++q)
          part = detail::convolve(part, powers[q][atom.counts[q]], out_len);
        for (std::size_t i = 0; i < part.size(); ++i)
          acc[i] += atom.probability * part[i];
      }
      next[static_cast<std::size_t>(p)] = std::move(acc);
    }
    return next;
  }

  // Spectrum path: one forward transform per type, one inverse per parent.
  detail::SpectrumMixer mixer(detail::next_pow2(full));
  std::vector<std::vector<std::complex<double>>> spectra(
      static_cast<std::size_t>(q_count));
  for (int q = 0; q < q_count; ++q) spectra[q] = mixer.forward(cur[q]);
  const std::size_t bins = spectra[0].size();
  for (int p = 0; p < q_count; ++p) {
    std::vector<std::complex<double>> acc(bins, {0.0, 0.0});
    for (const auto& atom : law.table(p + 1)) {
      for (std::size_t b = 0; b < bins; ++b) {
        std::complex<double> term(atom.probability, 0.0);
        for (int q = 0; q < q_count; ++q) {
          const std::complex<double> f = spectra[q][b];
          for (int j = 0; j < atom.counts[q]; ++j) term *= f;
        }
        acc[b] += term;
      }
    }
    next[static_cast<std::size_t>(p)] = mixer.inverse(acc, out_len);
  }
  return next;
}

std::vector<DensePmf> initial_total_laws(int q_count) {
  // Generation 0: the root alone.
  return std::vector<DensePmf>(static_cast<std::size_t>(q_count),
                               DensePmf{0.0, 1.0});
}

}  // namespace

GenerationLawTable GenerationLawTable::build(const BranchingModel& model,
                                             int m_max, std::int64_t cap) {
  if (m_max < 0) throw std::invalid_argument("generation table: m_max < 0");
  if (cap < 1) throw std::invalid_argument("generation table: cap < 1");
  GenerationLawTable table;
  table.cap_ = cap;
  const std::size_t cap_len = static_cast<std::size_t>(cap) + 1;
  auto cur = initial_total_laws(model.num_types);
  table.rows_.push_back(compact_row(cur[static_cast<std::size_t>(model.heavy_type() - 1)]));
  for (int m = 1; m <= m_max; ++m) {
    cur = step_total_laws(model.offspring, cur, cap_len);
    table.rows_.push_back(
        compact_row(cur[static_cast<std::size_t>(model.heavy_type() - 1)]));
  }
  return table;
}

const GenerationPmfRow& GenerationLawTable::row(int m) const {
  return rows_.at(static_cast<std::size_t>(m));
}

GenerationPmfRow generation_total_pmf(const BranchingModel& model, int m,
                                      std::int64_t cap) {
  if (m < 0) throw std::invalid_argument("generation_total_pmf: m < 0");
  if (cap < 1) throw std::invalid_argument("generation_total_pmf: cap < 1");
  const std::size_t cap_len = static_cast<std::size_t>(cap) + 1;
  auto cur = initial_total_laws(model.num_types);
  for (int g = 1; g <= m; ++g) cur = step_total_laws(model.offspring, cur, cap_len);
  GenerationPmfRow row =
      compact_row(cur[static_cast<std::size_t>(model.heavy_type() - 1)]);
  if (row.retained_mass() < 0.99)
    throw std::runtime_error(
        "generation_total_pmf: cap " + std::to_string(cap) + " retains only " +
        std::to_string(row.retained_mass()) + " of the mass at generation " +
        std::to_string(m));
  return row;
}

std::int64_t simulate_generation_total(const BranchingModel& model,
                                       int root_type, int m, Rng& rng) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(model.num_types), 0);
  counts[static_cast<std::size_t>(root_type - 1)] = 1;
  constexpr std::int64_t kRunawayGuard = 1'000'000'000;
  for (int g = 0; g < m; ++g) {
    std::vector<std::int64_t> next(counts.size(), 0);
    std::int64_t total = 0;
    for (int q = 1; q <= model.num_types; ++q) {
      for (std::int64_t i = 0; i < counts[static_cast<std::size_t>(q - 1)]; ++i) {
        const OffspringVector& kids = model.offspring.sample(q, rng);
        for (int c = 0; c < model.num_types; ++c) {
          next[static_cast<std::size_t>(c)] += kids[static_cast<std::size_t>(c)];
          total += kids[static_cast<std::size_t>(c)];
        }
      }
    }
    if (total > kRunawayGuard)
      throw std::runtime_error("simulate_generation_total: population runaway");
    counts = std::move(next);
  }
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

}  // namespace brw
