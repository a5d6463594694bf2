#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fama/intervals.hpp"
#include "fama/types.hpp"

namespace fama::sim {

/// Oracle: fit with the true k_m and k0. Estimate: JIC and gap rule.
enum class RankMode { Oracle, Estimate };

struct SimConfig {
  Index n = 500;
  std::vector<Index> p{200, 200, 200};
  std::vector<Index> k{6, 6, 6};
  Index k0 = 9;
  std::vector<double> psi{0.5, 0.5, 0.5};
  double sigma_lo = 5.0;
  double sigma_hi = 10.0;
  std::size_t reps = 50;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  Index submatrix_size = 100;
  RankMode rank_mode = RankMode::Estimate;
  bool baseline = false;   // also score the concatenated-PCA baseline
  bool noiseless = false;  // generate Y_m without residual noise

  std::size_t view_count() const { return p.size(); }
};

/// Throws InvalidArgument / InfeasibleAssignment on inconsistent settings.
void validate(const SimConfig& config);

/// Loadings, selection, residual variances and an n × k0 factor draw.
TrueModel generate_true_model(const SimConfig& config, std::uint64_t seed);

/// Replaces model.F0 by a fresh n × k0 standard normal draw.
void redraw_factors(TrueModel& model, Index n, std::uint64_t seed);

/// Y_m = F0 A_m Λ0_mᵀ + E_m using model.F0 (which must have n rows).
MultiViewDataset generate_data(const TrueModel& model, Index n, std::uint64_t seed, bool noiseless = false);

/// ‖estimate − truth‖_F / ‖truth‖_F. Throws ZeroTruth.
double rel_frobenius_error(const Matrix& estimate, const Matrix& truth);

/// Same ratio for A_1B_1ᵀ against A_2B_2ᵀ without forming either product.
double rel_frobenius_error_lowrank(const Matrix& A_est, const Matrix& B_est, const Matrix& A_true,
                                   const Matrix& B_true);

struct CoverageOptions {
  double width_scale = 1.0;   // probe: multiplies every half width
  bool force_rho_one = false;
};

struct CoverageResult {
  std::vector<double> intra;                                // per view
  std::vector<std::pair<std::size_t, std::size_t>> pairs;   // m < m'
  std::vector<double> inter;                                // per pair

  double intra_mean() const;
  double inter_mean() const;  // NaN for a single view
};

/// Fraction of entries of random submatrix_size × submatrix_size submatrices
/// of each Λ0_mΛ0_mᵀ (off-diagonal entries) and Λ0_mA_mᵀA_m'Λ0_m'ᵀ whose
/// interval covers the truth.
CoverageResult empirical_coverage(const FitArtifact& fit, const TrueModel& model, double alpha,
                                  intervals::Method method, Index submatrix_size, std::uint64_t seed,
                                  const CoverageOptions& options = {});

struct BlockErrors {
  double overall = 0.0;
  std::vector<double> intra;
  std::vector<double> inter;  // pairs m < m', row-major
};

/// Relative Frobenius errors of the low-rank parts from estimated loadings
/// (one p_m × k matrix per view, common k).
BlockErrors covariance_errors(const std::vector<Matrix>& loadings, const TrueModel& model);

/// Reference baseline: top-k0 PCA of the column-concatenated views, loadings
/// V S / √n split back per view.
std::vector<Matrix> concatenated_pca_loadings(const MultiViewDataset& data, Index k0);

/// Procrustes distance / √n between F̂ and F0; the narrower matrix is
/// padded with zero columns.
double factor_recovery_error(const Matrix& F_hat, const Matrix& F0);

struct ReplicateResult {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  BlockErrors errors;
  CoverageResult clt;
  CoverageResult bvm;
  CoverageResult bvm_unit_rho;
  double procrustes = 0.0;
  std::vector<Index> k_hat;
  Index k0_hat = 0;
  bool ranks_recovered = false;
  std::vector<Index> factor_usage;  // diagonal of Σ_m A_m A_mᵀ
  BlockErrors baseline;
  double wall_time = 0.0;
};

struct Summary {
  std::string metric;
  double mean = 0.0;
  double median = 0.0;
  std::size_t count = 0;
};

struct SimReport {
  SimConfig config;
  std::vector<ReplicateResult> replicates;
  std::vector<Summary> aggregates;

  const Summary& aggregate(const std::string& metric) const;
};

/// One replicate: model and data from (seed, index), fit, scoring.
ReplicateResult run_replicate(const SimConfig& config, std::size_t index);

/// All replicates (in parallel) and their aggregates. Per-replicate
/// failures are recorded, not thrown.
SimReport run_experiment(const SimConfig& config);

std::vector<Summary> summarize(const std::vector<ReplicateResult>& replicates, bool baseline);

/// Standardized statistics (λ̂_jᵀλ̂_j' − truth)/(Ŝ/√n) for entry (j, j') of
/// view m, over `reps` data sets drawn from one fixed model.
std::vector<double> clt_probe(const SimConfig& config, std::size_t reps, std::size_t m, Index j, Index j_prime);

}  // namespace fama::sim
