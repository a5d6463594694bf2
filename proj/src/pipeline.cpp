#include "fama/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>

#include "fama/error.hpp"
#include "fama/preprocess.hpp"
#include "fama/rank_select.hpp"

namespace fama {

namespace {

template <typename F>
auto stage(const FitOptions& options, std::string_view name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      if (options.on_stage) {
        options.on_stage(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      }
    } else {
      auto out = body();
      if (options.on_stage) {
        options.on_stage(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      }
      return out;
    }
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.detail());
  }
}

}  // namespace

FitArtifact fit(const MultiViewDataset& dataset, const FitOptions& options) {
  stage(options, "validate", [&] { validate(dataset); });
  const std::size_t M = dataset.view_count();
  const Index n = dataset.n();

  FitArtifact out;
  out.n = n;
  out.seed = options.seed;
  out.settings = {options.prior.nu0, options.prior.sigma0_sq, options.exact_term_count};
  out.view_names = dataset.view_names;
  if (out.view_names.empty()) {
    for (std::size_t m = 0; m < M; ++m) out.view_names.push_back("view" + std::to_string(m));
  }

  std::vector<Matrix> Y(M);
  out.preprocessing.resize(M);
  stage(options, "preprocess", [&] {
    for (std::size_t m = 0; m < M; ++m) {
      Y[m] = preprocess::fit_transform(dataset.views[m], options.preprocess, &out.preprocessing[m]);
    }
  });

  spectral::SvdOptions svd = options.svd;
  svd.seed = options.seed;
  std::vector<Index> p(M);
  for (std::size_t m = 0; m < M; ++m) p[m] = Y[m].cols();

  std::vector<Index>& k = out.ranks.k_per_view;
  stage(options, "view-ranks", [&] {
    if (options.k_per_view) {
      k = *options.k_per_view;
      if (k.size() != M) throw Error(Errc::DimensionMismatch, "one rank per view is required");
      return;
    }
    k.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
      const Index k_max = options.k_max ? std::min(*options.k_max, std::min(n, p[m])) : rank::default_k_max(Y[m]);
      auto result = rank::select_view_rank(Y[m], k_max, {}, svd);
      k[m] = result.k;
      if (result.floored_columns > 0) {
        out.diagnostics.warnings.push_back("view " + std::to_string(m) + ": residual variance floored in " +
                                           std::to_string(result.floored_columns) + " column evaluations");
      }
      out.diagnostics.jic.push_back(std::move(result.trace));
    }
  });

  std::vector<Matrix>& bases = out.factor_estimate.bases;
  bases.resize(M);
  const auto averaged = stage(options, "projections", [&] {
    for (std::size_t m = 0; m < M; ++m) bases[m] = spectral::view_projection(Y[m], k[m], svd);
    return spectral::average_projection(bases);
  });
  const Index total_k = averaged.rank_bound();
  out.factor_estimate.avg_projection_singvals = averaged.singular_values(total_k < n ? total_k + 1 : total_k);

  stage(options, "global-rank", [&] {
    const Index largest = *std::max_element(k.begin(), k.end());
    if (options.k0) {
      out.ranks.k0 = *options.k0;
    } else {
      const Index k0_max = options.k0_max ? *options.k0_max : std::min(total_k, n - 1);
      const Vector s = averaged.singular_values(k0_max + 1);
      const auto result = rank::select_global_rank(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())),
                                                   k, static_cast<Index>(M), k0_max, options.tau1);
      out.ranks.k0 = result.k0;
      if (result.constraint_unsatisfied) {
        out.diagnostics.k0_constraint_unsatisfied = true;
        out.diagnostics.warnings.push_back("k0-constraint-unsatisfied");
      }
      if (out.ranks.k0 < largest) {
        out.diagnostics.warnings.push_back("k0 raised from " + std::to_string(out.ranks.k0) +
                                           " to the largest view rank " + std::to_string(largest));
        out.ranks.k0 = largest;
      }
    }
    check_invariants(out.ranks, n, p);
  });

  out.factor_estimate.F_hat =
      stage(options, "factors", [&] { return spectral::estimate_factors(averaged, out.ranks.k0); });

  out.posteriors.resize(M);
  stage(options, "posteriors", [&] {
    for (std::size_t m = 0; m < M; ++m) {
      const double tau_sq = posterior::tune_prior_variance(Y[m], bases[m], k[m]);
      out.posteriors[m] = posterior::nig_posterior(Y[m], out.factor_estimate.F_hat, tau_sq, options.prior);
    }
  });

  stage(options, "inflation", [&] {
    for (std::size_t m = 0; m < M; ++m) {
      posterior::InflationOptions inflation;
      inflation.exact_term_count = options.exact_term_count;
      inflation.keep_matrix = false;
      inflation.subsample_above = options.subsample_above;
      inflation.seed = options.seed;
      const auto report = posterior::inflation_factors(out.posteriors[m], inflation);
      out.posteriors[m].rho = report.rho;
      out.posteriors[m].rho_max = report.rho_max;
    }
  });
  return out;
}

std::vector<Matrix> preprocessed_views(const MultiViewDataset& dataset, const FitArtifact& fit) {
  if (fit.preprocessing.size() != dataset.view_count()) {
    throw Error(Errc::DimensionMismatch, "artifact and dataset differ in view count");
  }
  std::vector<Matrix> out;
  for (std::size_t m = 0; m < dataset.view_count(); ++m) {
    out.push_back(preprocess::apply_spec(fit.preprocessing[m], dataset.views[m]));
  }
  return out;
}

}  // namespace fama
