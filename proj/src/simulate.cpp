#include "fama/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "fama/error.hpp"
#include "fama/parallel.hpp"
#include "fama/pipeline.hpp"
#include "fama/random.hpp"
#include "fama/spectral.hpp"
#include "fama/stats.hpp"

namespace fama::sim {

namespace {

constexpr std::uint64_t kAssignTag = 0x41535349474eull;  // "ASSIGN"
constexpr std::uint64_t kLoadTag = 0x4c4f4144ull;        // "LOAD"
constexpr std::uint64_t kSigmaTag = 0x5349474dull;       // "SIGM"
constexpr std::uint64_t kFactorTag = 0x46414354ull;      // "FACT"
constexpr std::uint64_t kNoiseTag = 0x4e4f4953ull;       // "NOIS"
constexpr std::uint64_t kSubTag = 0x53554253ull;         // "SUBS"
constexpr std::uint64_t kRepTag = 0x5245504cull;         // "REPL"
constexpr std::uint64_t kProbeTag = 0x50524f42ull;       // "PROB"

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Index> sample_indices(RandomStream& rng, Index p, Index count) {
  std::vector<Index> all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    const auto pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - i)));
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(i + pick)]);
  }
  all.resize(static_cast<std::size_t>(count));
  return all;
}

double trace_product(const Matrix& X, const Matrix& Y) { return X.cwiseProduct(Y.transpose()).sum(); }

double entry_truth(const Matrix& Ea, Index j, const Matrix& Eb, Index jp) { return Ea.row(j).dot(Eb.row(jp)); }

double mean_or_nan(const std::vector<double>& v) {
  return v.empty() ? kNaN : stats::mean(std::span<const double>(v));
}

std::uint64_t replicate_seed(const SimConfig& config, std::size_t index) {
  return derive_stream({kRepTag, config.seed, index});
}

}  // namespace

void validate(const SimConfig& config) {
  const std::size_t M = config.view_count();
  if (M < 1) throw Error(Errc::InvalidArgument, "at least one view is required");
  if (config.k.size() != M || config.psi.size() != M) {
    throw Error(Errc::InvalidArgument, "p, k and psi must list one value per view");
  }
  if (config.n < 2) throw Error(Errc::InvalidArgument, "n must be at least 2");
  if (!(config.sigma_lo > 0.0) || !(config.sigma_hi >= config.sigma_lo)) {
    throw Error(Errc::InvalidArgument, "sigma range must satisfy 0 < lo <= hi");
  }
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  Index total = 0;
  for (std::size_t m = 0; m < M; ++m) {
    if (config.p[m] < 1) throw Error(Errc::InvalidArgument, "every view needs p >= 1");
    if (config.k[m] < 1 || config.k[m] > std::min(config.n, config.p[m])) {
      throw Error(Errc::InvalidArgument, "k_m must lie in [1, min(n, p_m)]");
    }
    if (config.k[m] > config.k0) throw Error(Errc::InvalidArgument, "k0 must be at least max k_m");
    if (!(config.psi[m] > 0.0)) throw Error(Errc::InvalidArgument, "psi must be positive");
    total += config.k[m];
  }
  if (total < config.k0) throw Error(Errc::InfeasibleAssignment, "sum of k_m is below k0");
  if (config.submatrix_size < 1 || config.submatrix_size > *std::min_element(config.p.begin(), config.p.end())) {
    throw Error(Errc::InvalidArgument, "submatrix size must lie in [1, min p_m]");
  }
}

TrueModel generate_true_model(const SimConfig& config, std::uint64_t seed) {
  validate(config);
  const std::size_t M = config.view_count();
  TrueModel model;
  model.k0 = config.k0;
  model.psi = config.psi;
  model.active.resize(M);

  // Round-robin: factor f goes to the next view (cyclically) with a free slot.
  std::size_t cursor = 0;
  for (Index f = 0; f < config.k0; ++f) {
    while (static_cast<Index>(model.active[cursor].size()) >= config.k[cursor]) cursor = (cursor + 1) % M;
    model.active[cursor].push_back(f);
    cursor = (cursor + 1) % M;
  }
  // Random fill of the remaining slots with factors the view does not use yet.
  RandomStream assign(seed, derive_stream({kAssignTag}));
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<Index> unused;
    for (Index f = 0; f < config.k0; ++f) {
      if (std::find(model.active[m].begin(), model.active[m].end(), f) == model.active[m].end()) unused.push_back(f);
    }
    const Index missing = config.k[m] - static_cast<Index>(model.active[m].size());
    const auto picks = sample_indices(assign, static_cast<Index>(unused.size()), missing);
    for (const Index i : picks) model.active[m].push_back(unused[static_cast<std::size_t>(i)]);
    std::sort(model.active[m].begin(), model.active[m].end());
  }

  for (std::size_t m = 0; m < M; ++m) {
    RandomStream load(seed, derive_stream({kLoadTag, m}));
    Matrix L(config.p[m], config.k[m]);
    for (Index j = 0; j < L.rows(); ++j) {
      for (Index c = 0; c < L.cols(); ++c) L(j, c) = config.psi[m] * load.normal();
    }
    model.Lambda0.push_back(std::move(L));
    RandomStream sig(seed, derive_stream({kSigmaTag, m}));
    Vector s(config.p[m]);
    for (Index j = 0; j < s.size(); ++j) s[j] = sig.uniform(config.sigma_lo, config.sigma_hi);
    model.sigma0_sq.push_back(std::move(s));
  }
  redraw_factors(model, config.n, seed);
  return model;
}

void redraw_factors(TrueModel& model, Index n, std::uint64_t seed) {
  RandomStream rng(seed, derive_stream({kFactorTag}));
  model.F0.resize(n, model.k0);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < model.k0; ++c) model.F0(i, c) = rng.normal();
  }
}

MultiViewDataset generate_data(const TrueModel& model, Index n, std::uint64_t seed, bool noiseless) {
  if (model.F0.rows() != n || model.F0.cols() != model.k0) {
    throw Error(Errc::DimensionMismatch, "model factors do not have n rows and k0 columns");
  }
  MultiViewDataset data;
  for (std::size_t m = 0; m < model.Lambda0.size(); ++m) {
    Matrix Y = model.F0 * model.embedded_loadings(m).transpose();
    if (!noiseless) {
      parallel_for(static_cast<std::size_t>(Y.cols()), [&](std::size_t js) {
        const auto j = static_cast<Index>(js);
        RandomStream rng(seed, derive_stream({kNoiseTag, m, js}));
        const double sd = std::sqrt(model.sigma0_sq[m][j]);
        for (Index i = 0; i < n; ++i) Y(i, j) += sd * rng.normal();
      });
    }
    data.views.push_back(std::move(Y));
    data.view_names.push_back("view" + std::to_string(m));
  }
  return data;
}

double rel_frobenius_error(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw Error(Errc::DimensionMismatch, "estimate and truth differ in shape");
  }
  const double denom = truth.norm();
  if (!(denom > 0.0)) throw Error(Errc::ZeroTruth, "truth has zero Frobenius norm");
  return (estimate - truth).norm() / denom;
}

double rel_frobenius_error_lowrank(const Matrix& A1, const Matrix& B1, const Matrix& A2, const Matrix& B2) {
  if (A1.rows() != A2.rows() || B1.rows() != B2.rows() || A1.cols() != B1.cols() || A2.cols() != B2.cols()) {
    throw Error(Errc::DimensionMismatch, "factor shapes are inconsistent");
  }
  const double est = trace_product(A1.transpose() * A1, B1.transpose() * B1);
  const double truth = trace_product(A2.transpose() * A2, B2.transpose() * B2);
  if (!(truth > 0.0)) throw Error(Errc::ZeroTruth, "truth has zero Frobenius norm");
  const double cross = trace_product(A1.transpose() * A2, B2.transpose() * B1);
  return std::sqrt(std::max(est + truth - 2.0 * cross, 0.0) / truth);
}

double CoverageResult::intra_mean() const { return mean_or_nan(intra); }
double CoverageResult::inter_mean() const { return mean_or_nan(inter); }

CoverageResult empirical_coverage(const FitArtifact& fit, const TrueModel& model, double alpha,
                                  intervals::Method method, Index submatrix_size, std::uint64_t seed,
                                  const CoverageOptions& options) {
  const std::size_t M = fit.view_count();
  if (model.Lambda0.size() != M) throw Error(Errc::DimensionMismatch, "fit and model differ in view count");
  std::vector<Matrix> E(M);
  for (std::size_t m = 0; m < M; ++m) {
    E[m] = model.embedded_loadings(m);
    if (E[m].rows() != fit.posteriors[m].p()) throw Error(Errc::DimensionMismatch, "fit and model differ in p");
    if (submatrix_size > E[m].rows()) throw Error(Errc::InvalidArgument, "submatrix larger than the view");
  }

  const bool infinite = std::isinf(options.width_scale);
  auto covered = [&](const intervals::IntervalResult& r, double truth) {
    return infinite || std::abs(r.center - truth) <= r.half_width * options.width_scale;
  };

  CoverageResult out;
  for (std::size_t m = 0; m < M; ++m) {
    RandomStream rng(seed, derive_stream({kSubTag, m, m}));
    auto rows = sample_indices(rng, E[m].rows(), submatrix_size);
    auto cols = sample_indices(rng, E[m].rows(), submatrix_size);
    const auto block = intervals::interval_matrix(fit, m, m, alpha, method, rows, cols, options.force_rho_one);
    std::size_t hits = 0, total = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (rows[r] == cols[c]) continue;
        ++total;
        hits += covered(block.at(r, c), entry_truth(E[m], rows[r], E[m], cols[c]));
      }
    }
    out.intra.push_back(total ? static_cast<double>(hits) / static_cast<double>(total) : kNaN);
  }
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t mp = m + 1; mp < M; ++mp) {
      RandomStream rng(seed, derive_stream({kSubTag, m, mp}));
      auto rows = sample_indices(rng, E[m].rows(), std::min(submatrix_size, E[m].rows()));
      auto cols = sample_indices(rng, E[mp].rows(), std::min(submatrix_size, E[mp].rows()));
      const auto block = intervals::interval_matrix(fit, m, mp, alpha, method, rows, cols, options.force_rho_one);
      std::size_t hits = 0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
          hits += covered(block.at(r, c), entry_truth(E[m], rows[r], E[mp], cols[c]));
        }
      }
      out.pairs.emplace_back(m, mp);
      out.inter.push_back(static_cast<double>(hits) / static_cast<double>(rows.size() * cols.size()));
    }
  }
  return out;
}

BlockErrors covariance_errors(const std::vector<Matrix>& loadings, const TrueModel& model) {
  const std::size_t M = loadings.size();
  if (model.Lambda0.size() != M) throw Error(Errc::DimensionMismatch, "estimate and model differ in view count");
  std::vector<Matrix> E(M);
  Index total_p = 0;
  for (std::size_t m = 0; m < M; ++m) {
    E[m] = model.embedded_loadings(m);
    total_p += E[m].rows();
  }
  BlockErrors out;
  for (std::size_t m = 0; m < M; ++m) {
    out.intra.push_back(rel_frobenius_error_lowrank(loadings[m], loadings[m], E[m], E[m]));
  }
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t mp = m + 1; mp < M; ++mp) {
      out.inter.push_back(rel_frobenius_error_lowrank(loadings[m], loadings[mp], E[m], E[mp]));
    }
  }
  Matrix L(total_p, loadings.front().cols()), T(total_p, model.k0);
  Index offset = 0;
  for (std::size_t m = 0; m < M; ++m) {
    L.middleRows(offset, E[m].rows()) = loadings[m];
    T.middleRows(offset, E[m].rows()) = E[m];
    offset += E[m].rows();
  }
  out.overall = rel_frobenius_error_lowrank(L, L, T, T);
  return out;
}

std::vector<Matrix> concatenated_pca_loadings(const MultiViewDataset& data, Index k0) {
  Index total_p = 0;
  for (const Matrix& Y : data.views) total_p += Y.cols();
  Matrix stacked(data.n(), total_p);
  Index offset = 0;
  for (const Matrix& Y : data.views) {
    stacked.middleCols(offset, Y.cols()) = Y;
    offset += Y.cols();
  }
  const auto svd = spectral::truncated_svd(stacked, k0);
  const Matrix L = svd.Vt.transpose() * svd.s.asDiagonal() / std::sqrt(static_cast<double>(data.n()));
  std::vector<Matrix> out;
  offset = 0;
  for (const Matrix& Y : data.views) {
    out.push_back(L.middleRows(offset, Y.cols()));
    offset += Y.cols();
  }
  return out;
}

double factor_recovery_error(const Matrix& F_hat, const Matrix& F0) {
  if (F_hat.rows() != F0.rows()) throw Error(Errc::DimensionMismatch, "factor matrices differ in row count");
  const Index k = std::max(F_hat.cols(), F0.cols());
  Matrix A = Matrix::Zero(F_hat.rows(), k), B = Matrix::Zero(F0.rows(), k);
  A.leftCols(F_hat.cols()) = F_hat;
  B.leftCols(F0.cols()) = F0;
  return spectral::procrustes_distance(A, B) / std::sqrt(static_cast<double>(F0.rows()));
}

ReplicateResult run_replicate(const SimConfig& config, std::size_t index) {
  ReplicateResult r;
  r.index = index;
  const auto start = std::chrono::steady_clock::now();
  try {
    const std::uint64_t seed = replicate_seed(config, index);
    const TrueModel model = generate_true_model(config, seed);
    const MultiViewDataset data = generate_data(model, config.n, seed, config.noiseless);

    r.factor_usage.assign(static_cast<std::size_t>(model.k0), 0);
    for (const auto& act : model.active) {
      for (const Index f : act) ++r.factor_usage[static_cast<std::size_t>(f)];
    }

    FitOptions options;
    options.seed = seed;
    if (config.rank_mode == RankMode::Oracle) {
      options.k_per_view = config.k;
      options.k0 = config.k0;
    }
    const FitArtifact fit = ::fama::fit(data, options);
    r.k_hat = fit.ranks.k_per_view;
    r.k0_hat = fit.ranks.k0;
    r.ranks_recovered = r.k_hat == config.k && r.k0_hat == config.k0;

    std::vector<Matrix> loadings;
    for (const auto& post : fit.posteriors) loadings.push_back(post.lambda_hat);
    r.errors = covariance_errors(loadings, model);
    r.procrustes = factor_recovery_error(fit.factor_estimate.F_hat, model.F0);

    r.clt = empirical_coverage(fit, model, config.alpha, intervals::Method::Clt, config.submatrix_size, seed);
    r.bvm = empirical_coverage(fit, model, config.alpha, intervals::Method::Bvm, config.submatrix_size, seed);
    r.bvm_unit_rho = empirical_coverage(fit, model, config.alpha, intervals::Method::Bvm, config.submatrix_size,
                                        seed, {.width_scale = 1.0, .force_rho_one = true});
    if (config.baseline) r.baseline = covariance_errors(concatenated_pca_loadings(data, config.k0), model);
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<Summary> summarize(const std::vector<ReplicateResult>& replicates, bool baseline) {
  using Getter = double (*)(const ReplicateResult&);
  std::vector<std::pair<std::string, Getter>> metrics{
      {"rel_frob_overall", [](const ReplicateResult& r) { return r.errors.overall; }},
      {"rel_frob_intra", [](const ReplicateResult& r) { return mean_or_nan(r.errors.intra); }},
      {"rel_frob_inter", [](const ReplicateResult& r) { return mean_or_nan(r.errors.inter); }},
      {"coverage_clt_intra", [](const ReplicateResult& r) { return r.clt.intra_mean(); }},
      {"coverage_clt_inter", [](const ReplicateResult& r) { return r.clt.inter_mean(); }},
      {"coverage_bvm_intra", [](const ReplicateResult& r) { return r.bvm.intra_mean(); }},
      {"coverage_bvm_inter", [](const ReplicateResult& r) { return r.bvm.inter_mean(); }},
      {"coverage_bvm_unit_rho_intra", [](const ReplicateResult& r) { return r.bvm_unit_rho.intra_mean(); }},
      {"coverage_bvm_unit_rho_inter", [](const ReplicateResult& r) { return r.bvm_unit_rho.inter_mean(); }},
      {"procrustes_error", [](const ReplicateResult& r) { return r.procrustes; }},
      {"rank_recovery", [](const ReplicateResult& r) { return r.ranks_recovered ? 1.0 : 0.0; }},
  };
  if (baseline) {
    metrics.emplace_back("baseline_rel_frob_overall", [](const ReplicateResult& r) { return r.baseline.overall; });
    metrics.emplace_back("baseline_rel_frob_intra",
                         [](const ReplicateResult& r) { return mean_or_nan(r.baseline.intra); });
    metrics.emplace_back("baseline_rel_frob_inter",
                         [](const ReplicateResult& r) { return mean_or_nan(r.baseline.inter); });
  }
  std::vector<Summary> out;
  for (const auto& [name, get] : metrics) {
    std::vector<double> values;
    for (const auto& r : replicates) {
      if (!r.ok) continue;
      const double v = get(r);
      if (!std::isnan(v)) values.push_back(v);
    }
    out.push_back({name, mean_or_nan(values), stats::median(values), values.size()});
  }
  return out;
}

const Summary& SimReport::aggregate(const std::string& metric) const {
  for (const auto& s : aggregates) {
    if (s.metric == metric) return s;
  }
  throw Error(Errc::InvalidArgument, "no aggregate named '" + metric + "'");
}

SimReport run_experiment(const SimConfig& config) {
  validate(config);
  SimReport report;
  report.config = config;
  report.replicates.resize(config.reps);
  parallel_for(config.reps, [&](std::size_t i) { report.replicates[i] = run_replicate(config, i); });
  report.aggregates = summarize(report.replicates, config.baseline);
  return report;
}

std::vector<double> clt_probe(const SimConfig& config, std::size_t reps, std::size_t m, Index j, Index jp) {
  const TrueModel base = generate_true_model(config, derive_stream({kProbeTag, config.seed}));
  if (m >= base.Lambda0.size() || j >= base.Lambda0[m].rows() || jp >= base.Lambda0[m].rows()) {
    throw Error(Errc::IndexOutOfRange, "probe entry outside the model");
  }
  const Matrix E = base.embedded_loadings(m);
  const double truth = entry_truth(E, j, E, jp);
  std::vector<double> out(reps, kNaN);
  parallel_for(reps, [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(config, r);
    TrueModel model = base;
    redraw_factors(model, config.n, seed);
    const MultiViewDataset data = generate_data(model, config.n, seed, config.noiseless);
    FitOptions options;
    options.seed = seed;
    if (config.rank_mode == RankMode::Oracle) {
      options.k_per_view = config.k;
      options.k0 = config.k0;
    }
    const FitArtifact fit = ::fama::fit(data, options);
    const auto iv = intervals::interval(fit, {m, m, j, jp, config.alpha, intervals::Method::Clt});
    out[r] = (iv.center - truth) / iv.se;
  });
  return out;
}

}  // namespace fama::sim
