#include "fama/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "fama/error.hpp"

namespace fama {

namespace {

std::string where(std::size_t m) { return "view " + std::to_string(m); }

}  // namespace

void validate(const MultiViewDataset& dataset) {
  if (dataset.views.empty()) throw Error(Errc::EmptyView, "dataset has no views");
  const Index n = dataset.views.front().rows();
  for (std::size_t m = 0; m < dataset.views.size(); ++m) {
    const Matrix& Y = dataset.views[m];
    if (Y.cols() < 1 || Y.rows() < 1) throw Error(Errc::EmptyView, where(m) + " has no entries");
    if (Y.rows() != n) {
      throw Error(Errc::DimensionMismatch, where(m) + " has " + std::to_string(Y.rows()) +
                                               " rows, expected " + std::to_string(n));
    }
    if (!Y.allFinite()) {
      for (Index j = 0; j < Y.cols(); ++j) {
        for (Index i = 0; i < Y.rows(); ++i) {
          if (!std::isfinite(Y(i, j))) {
            throw Error(Errc::NonFiniteEntry, where(m) + " entry (" + std::to_string(i) + ", " +
                                                  std::to_string(j) + ") is not finite");
          }
        }
      }
    }
  }
  if (n < 2) throw Error(Errc::DimensionMismatch, "at least two samples are required");
  if (!dataset.view_names.empty() && dataset.view_names.size() != dataset.views.size()) {
    throw Error(Errc::DimensionMismatch, "view_names length differs from view count");
  }
}

Matrix FactorEstimate::projection(std::size_t m, Index max_dense_n) const {
  const Matrix& U = bases.at(m);
  if (U.rows() > max_dense_n) {
    throw Error(Errc::InvalidArgument, "n = " + std::to_string(U.rows()) +
                                           " exceeds the dense projection threshold");
  }
  return U * U.transpose();
}

Matrix TrueModel::selection(std::size_t m) const {
  Matrix A = Matrix::Zero(k0, static_cast<Index>(active.at(m).size()));
  for (std::size_t c = 0; c < active[m].size(); ++c) A(active[m][c], static_cast<Index>(c)) = 1.0;
  return A;
}

Matrix TrueModel::embedded_loadings(std::size_t m) const {
  const Matrix& L = Lambda0.at(m);
  Matrix E = Matrix::Zero(L.rows(), k0);
  for (std::size_t c = 0; c < active[m].size(); ++c) E.col(active[m][c]) = L.col(static_cast<Index>(c));
  return E;
}

void check_invariants(const Ranks& ranks, Index n, const std::vector<Index>& p) {
  if (ranks.k_per_view.size() != p.size()) {
    throw Error(Errc::DimensionMismatch, "ranks list one k per view");
  }
  Index total = 0;
  Index largest = 0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    const Index k = ranks.k_per_view[m];
    if (k < 1 || k > std::min(n, p[m])) {
      throw Error(Errc::RankTooLarge, where(m) + " rank " + std::to_string(k) + " outside [1, min(n, p)]");
    }
    total += k;
    largest = std::max(largest, k);
  }
  if (ranks.k0 < largest || ranks.k0 > total) {
    throw Error(Errc::InvalidRange, "k0 = " + std::to_string(ranks.k0) + " outside [max k_m, sum k_m] = [" +
                                        std::to_string(largest) + ", " + std::to_string(total) + "]");
  }
}

void check_invariants(const FactorEstimate& estimate, double tol) {
  const Index n = estimate.F_hat.rows();
  const Index k0 = estimate.F_hat.cols();
  const Matrix gram = estimate.F_hat.transpose() * estimate.F_hat / static_cast<double>(n);
  if ((gram - Matrix::Identity(k0, k0)).cwiseAbs().maxCoeff() > tol) {
    throw Error(Errc::NonOrthogonalFactors, "F_hat^T F_hat differs from n I");
  }
  for (std::size_t m = 0; m < estimate.bases.size(); ++m) {
    const Matrix& U = estimate.bases[m];
    if (U.rows() != n) throw Error(Errc::DimensionMismatch, where(m) + " basis row count differs from n");
    const Matrix utu = U.transpose() * U;
    if ((utu - Matrix::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff() > tol) {
      throw Error(Errc::NonOrthogonalFactors, where(m) + " basis is not orthonormal");
    }
  }
  const Vector& s = estimate.avg_projection_singvals;
  for (Index i = 0; i < s.size(); ++i) {
    if (s[i] < -1e-10 || s[i] > 1.0 + 1e-10) {
      throw Error(Errc::InvalidRange, "averaged projection singular value outside [0, 1]");
    }
    if (i > 0 && s[i] > s[i - 1]) throw Error(Errc::InvalidRange, "singular values are not descending");
  }
}

void check_invariants(const ViewPosterior& post, Index n) {
  if (post.delta_sq.size() != post.lambda_hat.rows()) {
    throw Error(Errc::DimensionMismatch, "delta_sq length differs from loading rows");
  }
  if (!(post.delta_sq.array() > 0.0).all()) throw Error(Errc::NegativeDelta, "delta_sq must be positive");
  if (!(post.K_scalar > 0.0 && post.K_scalar <= 1.0 / static_cast<double>(n))) {
    throw Error(Errc::InvalidRange, "K_scalar outside (0, 1/n]");
  }
  if (!(post.rho >= 1.0)) throw Error(Errc::InvalidRange, "rho below 1");
  if (post.nu_n != post.nu0 + static_cast<double>(n)) throw Error(Errc::InvalidRange, "nu_n != nu0 + n");
}

void check_invariants(const TrueModel& model) {
  const std::size_t M = model.Lambda0.size();
  if (model.active.size() != M || model.sigma0_sq.size() != M || model.psi.size() != M) {
    throw Error(Errc::DimensionMismatch, "true model lists disagree on the view count");
  }
  for (std::size_t m = 0; m < M; ++m) {
    const auto& idx = model.active[m];
    if (static_cast<Index>(idx.size()) != model.Lambda0[m].cols()) {
      throw Error(Errc::DimensionMismatch, where(m) + " selection width differs from k_m");
    }
    // One 1 per column holds by representation; distinct rows give at most one 1 per row.
    std::set<Index> seen(idx.begin(), idx.end());
    if (seen.size() != idx.size()) throw Error(Errc::InvalidArgument, where(m) + " selects a factor twice");
    for (const Index g : idx) {
      if (g < 0 || g >= model.k0) throw Error(Errc::IndexOutOfRange, where(m) + " selects a missing factor");
    }
    if (model.sigma0_sq[m].size() != model.Lambda0[m].rows() || !(model.sigma0_sq[m].array() > 0.0).all()) {
      throw Error(Errc::InvalidRange, where(m) + " residual variances must be positive, one per variable");
    }
  }
  if (model.F0.size() > 0 && model.F0.cols() != model.k0) {
    throw Error(Errc::DimensionMismatch, "F0 width differs from k0");
  }
}

void check_invariants(const FitArtifact& fit) {
  const std::size_t M = fit.posteriors.size();
  if (M == 0 || fit.ranks.k_per_view.size() != M) {
    throw Error(Errc::DimensionMismatch, "posteriors and ranks disagree on the view count");
  }
  std::vector<Index> p(M);
  for (std::size_t m = 0; m < M; ++m) {
    p[m] = fit.posteriors[m].p();
    if (fit.posteriors[m].k0() != fit.ranks.k0) {
      throw Error(Errc::DimensionMismatch, where(m) + " posterior width differs from k0");
    }
    check_invariants(fit.posteriors[m], fit.n);
  }
  check_invariants(fit.ranks, fit.n, p);
  if (fit.factor_estimate.F_hat.rows() != fit.n || fit.factor_estimate.F_hat.cols() != fit.ranks.k0) {
    throw Error(Errc::DimensionMismatch, "F_hat shape differs from n x k0");
  }
  if (!fit.view_names.empty() && fit.view_names.size() != M) {
    throw Error(Errc::DimensionMismatch, "view_names length differs from view count");
  }
  if (!fit.preprocessing.empty() && fit.preprocessing.size() != M) {
    throw Error(Errc::DimensionMismatch, "preprocessing length differs from view count");
  }
}

}  // namespace fama
