#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fama/types.hpp"

namespace fama::covariance {

/// Which residual-variance estimate fills diag Ψ̂: the inverse-gamma
/// posterior mean ν_nδ²/(ν_n − 2), or δ² itself.
enum class ResidualPlugIn { PosteriorMean, Delta };

struct CovarianceOptions {
  ResidualPlugIn residual = ResidualPlugIn::PosteriorMean;
};

/// Intra-view Σ̂_m = Λ̂_mΛ̂_mᵀ + Ψ̂_m and inter-view Λ̂_mΛ̂_m'ᵀ, held factored.
struct CovarianceBlocks {
  std::vector<Matrix> loadings;  // Λ̂_m, p_m × k0
  std::vector<Vector> psi;       // diag Ψ̂_m

  std::size_t view_count() const { return loadings.size(); }
  Matrix intra_lowrank(std::size_t m) const;
  Matrix intra(std::size_t m) const;
  /// Λ̂_mΛ̂_m'ᵀ. For m > m' this is the transpose of inter(m', m), so the two
  /// orders agree bit for bit.
  Matrix inter(std::size_t m, std::size_t m_prime) const;
};

CovarianceBlocks point_estimates(const FitArtifact& fit, const CovarianceOptions& options = {});

/// y_m | y_m' ~ N(mean, loadings · core · loadingsᵀ + diag(psi)).
struct ConditionalGaussian {
  Vector mean;
  Matrix loadings;  // Λ̂_m
  Matrix core;      // (I + Λ̂_m'ᵀΨ̂_m'⁻¹Λ̂_m')⁻¹, k0 × k0
  Vector psi;       // diag Ψ̂_m

  Matrix covariance() const;
};

/// Gaussian conditioning of view `target` on an observed row of view `given`,
/// with every p_m' × p_m' inverse replaced by the Woodbury identity.
ConditionalGaussian conditional_prediction(const CovarianceBlocks& blocks, std::size_t given, const Vector& y_obs,
                                           std::size_t target);

/// Conditional means for every row of Y_obs (n_test × p_given); row-aligned.
Matrix conditional_means(const CovarianceBlocks& blocks, std::size_t given, const Matrix& Y_obs,
                         std::size_t target);

/// Per-row log N(y_i; μ, Σ̂_S) for the joint covariance of the views in
/// `subset`; test matrices are given in subset order. μ defaults to 0.
Vector gaussian_loglik_rows(const CovarianceBlocks& blocks, std::span<const std::size_t> subset,
                            std::span<const Matrix> Y_test, std::span<const Vector> means = {});

double gaussian_loglik(const CovarianceBlocks& blocks, std::span<const std::size_t> subset,
                       std::span<const Matrix> Y_test, std::span<const Vector> means = {});

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // P(T ≥ t): evidence that the mean difference is positive
};

/// One-sided paired t-test on per-sample differences.
TTestResult paired_one_sided_t_test(std::span<const double> diffs);

}  // namespace fama::covariance
