#pragma once

#include <cstdint>
#include <vector>

#include "fama/types.hpp"

namespace fama::posterior {

/// Data-adaptive prior scale τ̂² = L / (k σ̂²) with L = ‖UᵀY‖²_F / n and
/// σ̂² = Σ_j ‖(I − UUᵀ) y_j‖² / n. Throws DegenerateVariance when σ̂² < 1e-12.
double tune_prior_variance(const Matrix& Y, const Matrix& U, Index k);

struct NigPrior {
  double nu0 = 1.0;
  double sigma0_sq = 1.0;
};

/// Conjugate NIG update for every column of Y regressed on F̂ (F̂ᵀF̂ = nI):
///   λ̂_j = F̂ᵀy_j / (n + τ⁻²),  K = I / (n + τ⁻²),  ν_n = ν0 + n,
///   δ²_j = (ν0σ0² + y_jᵀy_j − λ̂_jᵀK⁻¹λ̂_j) / ν_n.
/// The returned posterior has rho = rho_max = 1.
ViewPosterior nig_posterior(const Matrix& Y, const Matrix& F_hat, double tau_sq, const NigPrior& prior = {});

struct InflationOptions {
  /// Divide by the number of summed terms p(p+1)/2 instead of C(p, 2).
  bool exact_term_count = false;
  /// Keep the full p × p matrix of factors in the report.
  bool keep_matrix = true;
  /// Above this many variables the off-diagonal mean is estimated from
  /// `subsample_pairs` random pairs.
  Index subsample_above = 20000;
  std::uint64_t subsample_pairs = 10'000'000;
  std::uint64_t seed = 0;
};

struct InflationReport {
  Matrix b;  // symmetric p × p when kept, otherwise empty
  double rho = 1.0;
  double rho_max = 1.0;
  bool subsampled = false;
};

/// Coverage-correction factor b_{jj'} for one pair of variables.
double inflation_factor(const ViewPosterior& post, Index j, Index j_prime);

/// ρ = C(p,2)⁻¹ Σ_{j ≤ j'} b_{jj'} (or the exact-count mean) and ρ_max.
InflationReport inflation_factors(const ViewPosterior& post, const InflationOptions& options = {});

struct PosteriorSample {
  Matrix lambda_tilde;   // p × k0
  Vector sigma_tilde_sq; // p
};

/// Random-access stream of coverage-corrected posterior draws. Draw t of
/// variable j uses its own Philox stream keyed by (seed, view, j, t), so the
/// output does not depend on evaluation order or thread count.
class PosteriorSampler {
 public:
  PosteriorSampler(const ViewPosterior& post, double rho, std::uint64_t seed, std::uint64_t view_index);

  PosteriorSample draw(std::uint64_t t) const;

 private:
  const ViewPosterior& post_;
  double rho_;
  std::uint64_t seed_;
  std::uint64_t view_;
};

std::vector<PosteriorSample> sample_posterior(const ViewPosterior& post, double rho, std::size_t n_samples,
                                              std::uint64_t seed, std::uint64_t view_index);

}  // namespace fama::posterior
