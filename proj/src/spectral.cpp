#include "fama/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fama/error.hpp"
#include "fama/random.hpp"

namespace fama::spectral {

namespace {

constexpr std::uint64_t kRangeFinderStream = 0x5356445f52414e44ull;  // "SVD_RAND"

Matrix orthonormalize(const Matrix& X) {
  Eigen::HouseholderQR<Matrix> qr(X);
  return qr.householderQ() * Matrix::Identity(X.rows(), X.cols());
}

TruncatedSvd dense_svd(const Matrix& Y, Index k) {
  Eigen::BDCSVD<Matrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(Errc::ConvergenceFailure, "dense SVD did not converge");
  TruncatedSvd out;
  out.U = svd.matrixU().leftCols(k);
  out.s = svd.singularValues().head(k);
  out.Vt = svd.matrixV().leftCols(k).transpose();
  return out;
}

// Randomized range finder with power iterations (Halko, Martinsson & Tropp).
TruncatedSvd randomized_svd(const Matrix& Y, Index k, const SvdOptions& options) {
  const Index width = std::min(k + options.oversampling, std::min(Y.rows(), Y.cols()));
  RandomStream rng(options.seed, derive_stream({kRangeFinderStream, static_cast<std::uint64_t>(Y.rows()),
                                                static_cast<std::uint64_t>(Y.cols())}));
  Matrix omega(Y.cols(), width);
  for (Index j = 0; j < width; ++j)
    for (Index i = 0; i < Y.cols(); ++i) omega(i, j) = rng.normal();

  Matrix Q = orthonormalize(Y * omega);
  for (int it = 0; it < options.power_iterations; ++it) {
    Q = orthonormalize(Y.transpose() * Q);
    Q = orthonormalize(Y * Q);
  }
  const Matrix B = Q.transpose() * Y;
  Eigen::BDCSVD<Matrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(Errc::ConvergenceFailure, "randomized SVD did not converge");
  TruncatedSvd out;
  out.U = Q * svd.matrixU().leftCols(k);
  out.s = svd.singularValues().head(k);
  out.Vt = svd.matrixV().leftCols(k).transpose();
  return out;
}

}  // namespace

void fix_signs(Matrix& U, Matrix* Vt) {
  for (Index c = 0; c < U.cols(); ++c) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < U.rows(); ++i) {
      const double a = std::abs(U(i, c));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (U(best, c) < 0.0) {
      U.col(c) = -U.col(c);
      if (Vt != nullptr) Vt->row(c) = -Vt->row(c);
    }
  }
}

TruncatedSvd truncated_svd(const Matrix& Y, Index k, const SvdOptions& options) {
  const Index limit = std::min(Y.rows(), Y.cols());
  if (k < 1 || k > limit) {
    throw Error(Errc::RankTooLarge, "k = " + std::to_string(k) + " outside [1, " + std::to_string(limit) + "]");
  }
  if (!Y.allFinite()) throw Error(Errc::NonFiniteEntry, "matrix passed to truncated_svd is not finite");
  TruncatedSvd out = limit <= options.dense_limit ? dense_svd(Y, k) : randomized_svd(Y, k, options);
  fix_signs(out.U, &out.Vt);
  return out;
}

Matrix view_projection(const Matrix& Y, Index k, const SvdOptions& options) {
  return truncated_svd(Y, k, options).U;
}

AveragedProjection::AveragedProjection(Index n, std::size_t views, Vector eigenvalues, Matrix eigenvectors)
    : n_(n), views_(views), eigenvalues_(std::move(eigenvalues)), eigenvectors_(std::move(eigenvectors)) {}

Matrix AveragedProjection::eigenvectors(Index k) const {
  if (k < 0 || k > eigenvectors_.cols()) {
    throw Error(Errc::RankTooLarge, "requested " + std::to_string(k) + " eigenvectors of a rank-" +
                                        std::to_string(eigenvectors_.cols()) + " operator");
  }
  return eigenvectors_.leftCols(k);
}

Vector AveragedProjection::singular_values(Index count) const {
  Vector s = Vector::Zero(count);
  const Index known = std::min(count, eigenvalues_.size());
  s.head(known) = eigenvalues_.head(known);
  return s;
}

Matrix AveragedProjection::dense(Index max_dense_n) const {
  if (n_ > max_dense_n) throw Error(Errc::InvalidArgument, "n exceeds the dense projection threshold");
  return eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose();
}

AveragedProjection average_projection(std::span<const Matrix> bases) {
  if (bases.empty()) throw Error(Errc::EmptyView, "no projections to average");
  const Index n = bases.front().rows();
  Index width = 0;
  for (const Matrix& U : bases) {
    if (U.rows() != n) throw Error(Errc::DimensionMismatch, "projection bases differ in row count");
    width += U.cols();
  }
  Matrix W(n, width);
  Index offset = 0;
  for (const Matrix& U : bases) {
    W.middleCols(offset, U.cols()) = U;
    offset += U.cols();
  }
  W /= std::sqrt(static_cast<double>(bases.size()));

  Eigen::BDCSVD<Matrix> svd(W, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw Error(Errc::ConvergenceFailure, "SVD of the stacked bases failed");
  const Index r = std::min(n, width);
  Vector eigenvalues = svd.singularValues().head(r).array().square();
  Matrix eigenvectors = svd.matrixU().leftCols(r);
  fix_signs(eigenvectors);
  return AveragedProjection(n, bases.size(), std::move(eigenvalues), std::move(eigenvectors));
}

Matrix estimate_factors(const AveragedProjection& averaged, Index k0) {
  if (k0 < 1 || k0 > averaged.rank_bound()) {
    throw Error(Errc::RankTooLarge, "k0 = " + std::to_string(k0) + " exceeds the available rank " +
                                        std::to_string(averaged.rank_bound()));
  }
  return std::sqrt(static_cast<double>(averaged.n())) * averaged.eigenvectors(k0);
}

Matrix procrustes_rotation(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw Error(Errc::DimensionMismatch, "Procrustes operands differ in shape");
  }
  Eigen::JacobiSVD<Matrix> svd(A.transpose() * B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

double procrustes_distance(const Matrix& A, const Matrix& B) {
  const Matrix R = procrustes_rotation(A, B);
  return (A * R - B).norm();
}

}  // namespace fama::spectral
