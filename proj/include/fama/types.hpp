#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fama {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Observed views Y_1..Y_M sharing the sample axis (n rows each).
struct MultiViewDataset {
  std::vector<Matrix> views;
  std::vector<std::string> view_names;

  Index n() const { return views.empty() ? 0 : views.front().rows(); }
  std::size_t view_count() const { return views.size(); }
  Index p(std::size_t m) const { return views.at(m).cols(); }
};

/// Throws DimensionMismatch, NonFiniteEntry or EmptyView.
void validate(const MultiViewDataset& dataset);

struct Ranks {
  Index k0 = 0;
  std::vector<Index> k_per_view;
};

/// Aligned factor estimate F̂ (n×k0) with the per-view orthonormal bases
/// U_m (n×k_m) whose projections U_m U_mᵀ were averaged to produce it.
struct FactorEstimate {
  Matrix F_hat;
  std::vector<Matrix> bases;
  /// Singular values of the averaged projection, descending. One trailing
  /// zero is appended when n exceeds the total basis width, so that
  /// s_{j+1} exists for every candidate global rank j.
  Vector avg_projection_singvals;

  /// Materializes P_m = U_m U_mᵀ. Refuses when n > max_dense_n.
  Matrix projection(std::size_t m, Index max_dense_n = 4096) const;
};

/// Conjugate normal-inverse-gamma posterior for every variable of one view.
struct ViewPosterior {
  Matrix lambda_hat;    // p_m × k0, row j is the posterior mean of loading j
  double K_scalar = 0;  // K_m = K_scalar · I
  double nu_n = 0;
  Vector delta_sq;      // length p_m
  double tau_sq = 0;
  double rho = 1;
  double rho_max = 1;
  double nu0 = 1;
  double sigma0_sq = 1;

  Index p() const { return lambda_hat.rows(); }
  Index k0() const { return lambda_hat.cols(); }
};

/// Generating parameters of a simulated multi-view factor model.
struct TrueModel {
  std::vector<Matrix> Lambda0;               // p_m × k_m
  std::vector<std::vector<Index>> active;    // global factor index of each view factor
  std::vector<Vector> sigma0_sq;             // length p_m
  std::vector<double> psi;
  Matrix F0;                                 // n × k0 (may be empty before data generation)
  Index k0 = 0;

  /// Boolean A_m (k0 × k_m) with A_m(active[m][c], c) = 1.
  Matrix selection(std::size_t m) const;
  /// Λ0_m A_mᵀ (p_m × k0): loadings expressed against all global factors.
  Matrix embedded_loadings(std::size_t m) const;
};

struct JicTrace {
  std::vector<double> per_k_loglik;
  std::vector<double> per_k_jic;
  Index chosen_k = 0;
  Index n = 0;
  Index p = 0;
};

enum class PreprocessMode { None, Standardize, RankNormal };

struct ColumnTransform {
  double mean = 0.0;
  double sd = 1.0;
  /// Sorted training values; only populated for RankNormal.
  std::vector<double> reference;
};

/// Per-view record of the column transform applied before fitting, with
/// the statistics needed to apply it again to new rows.
struct PreprocessSpec {
  PreprocessMode mode = PreprocessMode::None;
  std::vector<ColumnTransform> columns;
};

struct FitSettings {
  double nu0 = 1.0;
  double sigma0_sq = 1.0;
  bool exact_term_count = false;
};

struct FitDiagnostics {
  std::vector<JicTrace> jic;  // empty when view ranks were supplied
  std::vector<std::string> warnings;
  bool k0_constraint_unsatisfied = false;
};

/// Everything needed to reuse a fit: ranks, F̂, per-view posteriors and the
/// preprocessing that produced the fitted matrices.
struct FitArtifact {
  Ranks ranks;
  Index n = 0;
  std::vector<std::string> view_names;
  FactorEstimate factor_estimate;
  std::vector<ViewPosterior> posteriors;
  std::vector<PreprocessSpec> preprocessing;
  std::uint64_t seed = 0;
  FitSettings settings;
  FitDiagnostics diagnostics;

  std::size_t view_count() const { return posteriors.size(); }
};

// Invariant checks. Each throws fama::Error describing the first violation.
void check_invariants(const Ranks& ranks, Index n, const std::vector<Index>& p);
void check_invariants(const FactorEstimate& estimate, double tol = 1e-8);
void check_invariants(const ViewPosterior& posterior, Index n);
void check_invariants(const TrueModel& model);
void check_invariants(const FitArtifact& fit);

}  // namespace fama
