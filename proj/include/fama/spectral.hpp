#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fama/types.hpp"

namespace fama::spectral {

/// Top-k singular triplets Y ≈ U diag(s) Vt.
struct TruncatedSvd {
  Matrix U;   // n × k
  Vector s;   // k, descending
  Matrix Vt;  // k × p
};

struct SvdOptions {
  /// Dense bidiagonal SVD when min(n, p) ≤ dense_limit, randomized range
  /// finder above.
  Index dense_limit = 2048;
  Index oversampling = 10;
  int power_iterations = 2;
  std::uint64_t seed = 0;
};

/// Sign convention: in every left singular vector the entry of largest
/// magnitude is positive (lowest index wins ties); the matching right
/// vector is flipped with it.
TruncatedSvd truncated_svd(const Matrix& Y, Index k, const SvdOptions& options = {});

/// Applies the sign convention above in place. Vt may be null.
void fix_signs(Matrix& U, Matrix* Vt = nullptr);

/// Orthonormal basis U_m (n × k_m) of the leading left singular subspace;
/// the projection P_m = U_m U_mᵀ is implied.
Matrix view_projection(const Matrix& Y, Index k, const SvdOptions& options = {});

/// P̃ = (1/M) Σ_m U_m U_mᵀ held through its spectral decomposition.
class AveragedProjection {
 public:
  AveragedProjection(Index n, std::size_t views, Vector eigenvalues, Matrix eigenvectors);

  Index n() const { return n_; }
  std::size_t view_count() const { return views_; }
  /// Total basis width Σ k_m, the maximal rank of P̃.
  Index rank_bound() const { return eigenvalues_.size(); }
  /// Nonzero-part eigenvalues (= singular values), descending.
  const Vector& eigenvalues() const { return eigenvalues_; }
  Matrix eigenvectors(Index k) const;
  /// Leading `count` singular values, zero-padded past rank_bound().
  Vector singular_values(Index count) const;
  /// Dense n × n matrix; refuses when n > max_dense_n.
  Matrix dense(Index max_dense_n = 4096) const;

 private:
  Index n_;
  std::size_t views_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
};

/// Spectral decomposition of P̃ from the factored bases. The nonzero
/// eigenpairs of [U_1 … U_M][U_1 … U_M]ᵀ/M are read off the thin SVD of
/// the n × Σk_m concatenation, so no n × n matrix is formed.
AveragedProjection average_projection(std::span<const Matrix> bases);

/// F̂ = √n × (leading k0 eigenvectors of P̃), so F̂ᵀF̂ = n I.
Matrix estimate_factors(const AveragedProjection& averaged, Index k0);

/// min over orthogonal R of ‖A R − B‖_F.
double procrustes_distance(const Matrix& A, const Matrix& B);

/// Orthogonal R attaining procrustes_distance.
Matrix procrustes_rotation(const Matrix& A, const Matrix& B);

}  // namespace fama::spectral
