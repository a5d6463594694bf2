#pragma once

#include <optional>
#include <span>

#include "fama/spectral.hpp"
#include "fama/types.hpp"

namespace fama::rank {

/// Residual variances below this are floored when evaluating log-likelihoods.
inline constexpr double kVarianceFloor = 1e-12;

/// Prior-variance rule used inside the approximate log-likelihood: the
/// data-adaptive τ² of posterior::tune_prior_variance unless a fixed τ² is given.
struct TauRule {
  std::optional<double> fixed_tau_sq;
};

struct LoglikEval {
  double loglik = 0.0;
  Index floored_columns = 0;  // columns whose residual variance hit kVarianceFloor
};

/// k·max(n,p)·log(min(n,p)).
double jic_penalty(Index k, Index n, Index p);

/// Approximate joint log-likelihood of one view at rank k: principal-component
/// factors √n U_k, ridge loadings, per-column mean squared residual variances.
LoglikEval approx_loglik(const Matrix& Y, Index k, const TauRule& tau_rule = {},
                         const spectral::SvdOptions& svd = {});

struct ViewRankResult {
  Index k = 0;
  JicTrace trace;
  Index floored_columns = 0;  // summed over the scan
};

/// argmin over k ∈ {1..k_max} of the approximate JIC; ties go to the smaller k.
ViewRankResult select_view_rank(const Matrix& Y, Index k_max, const TauRule& tau_rule = {},
                                const spectral::SvdOptions& svd = {});

/// Smallest k whose leading components explain ≥ 90% of Σ s_l², capped at
/// min(n, p) − 1 (and at least 1).
Index default_k_max(const Matrix& Y);

struct GlobalRankResult {
  Index k0 = 0;
  bool constraint_unsatisfied = false;
};

/// Largest-gap rule on the singular values of P̃ over j ∈ [min k̂_m, k0_max],
/// restricted to j with s_{j+1} < 1/M − τ1. τ1 defaults to 1/(2M). Falls back
/// to k0_max (flagged) when no j satisfies the constraint.
GlobalRankResult select_global_rank(std::span<const double> singvals, std::span<const Index> k_view_hats,
                                    Index view_count, Index k0_max,
                                    std::optional<double> tau1 = std::nullopt);

}  // namespace fama::rank
