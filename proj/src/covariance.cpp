#include "fama/covariance.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fama/error.hpp"
#include "fama/stats.hpp"

namespace fama::covariance {

namespace {

void check_view(const CovarianceBlocks& blocks, std::size_t m) {
  if (m >= blocks.view_count()) throw Error(Errc::IndexOutOfRange, "view " + std::to_string(m) + " does not exist");
}

Eigen::LLT<Matrix> core_factor(const Matrix& L, const Vector& psi) {
  const Index k0 = L.cols();
  const Matrix scaled = psi.cwiseInverse().asDiagonal() * L;
  Matrix core = Matrix::Identity(k0, k0) + L.transpose() * scaled;
  Eigen::LLT<Matrix> llt(core);
  if (llt.info() != Eigen::Success) throw Error(Errc::SingularCore, "I + L^T Psi^-1 L is not positive definite");
  return llt;
}

}  // namespace

Matrix CovarianceBlocks::intra_lowrank(std::size_t m) const {
  check_view(*this, m);
  return loadings[m] * loadings[m].transpose();
}

Matrix CovarianceBlocks::intra(std::size_t m) const {
  Matrix S = intra_lowrank(m);
  S.diagonal() += psi[m];
  return S;
}

Matrix CovarianceBlocks::inter(std::size_t m, std::size_t mp) const {
  check_view(*this, m);
  check_view(*this, mp);
  if (m > mp) return inter(mp, m).transpose();
  return loadings[m] * loadings[mp].transpose();
}

CovarianceBlocks point_estimates(const FitArtifact& fit, const CovarianceOptions& options) {
  CovarianceBlocks blocks;
  for (const ViewPosterior& post : fit.posteriors) {
    blocks.loadings.push_back(post.lambda_hat);
    if (options.residual == ResidualPlugIn::PosteriorMean) {
      if (!(post.nu_n > 2.0)) throw Error(Errc::DegenerateNu, "posterior mean of sigma^2 needs nu_n > 2");
      blocks.psi.push_back(post.nu_n * post.delta_sq / (post.nu_n - 2.0));
    } else {
      blocks.psi.push_back(post.delta_sq);
    }
  }
  return blocks;
}

Matrix ConditionalGaussian::covariance() const {
  Matrix S = loadings * core * loadings.transpose();
  S.diagonal() += psi;
  return S;
}

ConditionalGaussian conditional_prediction(const CovarianceBlocks& blocks, std::size_t given, const Vector& y_obs,
                                           std::size_t target) {
  check_view(blocks, given);
  check_view(blocks, target);
  if (given == target) throw Error(Errc::InvalidArgument, "conditioning view must differ from the target view");
  const Matrix& L = blocks.loadings[given];
  if (y_obs.size() != L.rows()) throw Error(Errc::DimensionMismatch, "observed row length differs from p of the given view");
  if (!y_obs.allFinite()) throw Error(Errc::NonFiniteEntry, "observed row is not finite");

  const auto llt = core_factor(L, blocks.psi[given]);
  const Index k0 = L.cols();
  ConditionalGaussian out;
  out.core = llt.solve(Matrix::Identity(k0, k0));
  // Λ̂_m'ᵀ Σ_m'⁻¹ y = (I + G)⁻¹ Λ̂_m'ᵀ Ψ⁻¹ y
  const Vector w = llt.solve(L.transpose() * y_obs.cwiseQuotient(blocks.psi[given]));
  out.mean = blocks.loadings[target] * w;
  out.loadings = blocks.loadings[target];
  out.psi = blocks.psi[target];
  return out;
}

Matrix conditional_means(const CovarianceBlocks& blocks, std::size_t given, const Matrix& Y_obs,
                         std::size_t target) {
  check_view(blocks, given);
  check_view(blocks, target);
  if (given == target) throw Error(Errc::InvalidArgument, "conditioning view must differ from the target view");
  const Matrix& L = blocks.loadings[given];
  if (Y_obs.cols() != L.rows()) throw Error(Errc::DimensionMismatch, "observed rows differ from p of the given view");
  if (!Y_obs.allFinite()) throw Error(Errc::NonFiniteEntry, "observed rows are not finite");
  const auto llt = core_factor(L, blocks.psi[given]);
  const Matrix W = llt.solve((Y_obs * blocks.psi[given].cwiseInverse().asDiagonal() * L).transpose());
  return W.transpose() * blocks.loadings[target].transpose();
}

Vector gaussian_loglik_rows(const CovarianceBlocks& blocks, std::span<const std::size_t> subset,
                            std::span<const Matrix> Y_test, std::span<const Vector> means) {
  if (subset.empty()) throw Error(Errc::InvalidArgument, "view subset is empty");
  if (Y_test.size() != subset.size()) throw Error(Errc::DimensionMismatch, "one test matrix per subset view is required");
  if (!means.empty() && means.size() != subset.size()) {
    throw Error(Errc::DimensionMismatch, "one mean vector per subset view is required");
  }
  const Index n = Y_test.front().rows();
  Index total_p = 0;
  for (std::size_t s = 0; s < subset.size(); ++s) {
    check_view(blocks, subset[s]);
    const Index p = blocks.loadings[subset[s]].rows();
    if (Y_test[s].rows() != n || Y_test[s].cols() != p) {
      throw Error(Errc::DimensionMismatch, "test matrix " + std::to_string(s) + " does not match its view");
    }
    if (!means.empty() && means[s].size() != p) throw Error(Errc::DimensionMismatch, "mean length differs from p");
    total_p += p;
  }
  const Index k0 = blocks.loadings[subset.front()].cols();

  Matrix L(total_p, k0);
  Vector psi(total_p);
  Matrix Y(n, total_p);
  Index offset = 0;
  for (std::size_t s = 0; s < subset.size(); ++s) {
    const Index p = blocks.loadings[subset[s]].rows();
    L.middleRows(offset, p) = blocks.loadings[subset[s]];
    psi.segment(offset, p) = blocks.psi[subset[s]];
    Y.middleCols(offset, p) = Y_test[s];
    if (!means.empty()) Y.middleCols(offset, p).rowwise() -= means[s].transpose();
    offset += p;
  }

  const auto llt = core_factor(L, psi);
  const Vector inv_psi = psi.cwiseInverse();
  double logdet = psi.array().log().sum();
  const Matrix& core_l = llt.matrixLLT();
  for (Index c = 0; c < k0; ++c) logdet += 2.0 * std::log(core_l(c, c));

  const Matrix scaled = Y * inv_psi.asDiagonal();          // rows yᵢᵀΨ⁻¹
  const Vector quad_diag = (scaled.array() * Y.array()).rowwise().sum();
  const Matrix W = scaled * L;                             // rows yᵢᵀΨ⁻¹L
  const Matrix half = llt.matrixL().solve(W.transpose());  // L_c⁻¹ Wᵀ
  const Vector correction = half.colwise().squaredNorm().transpose();

  const double constant = static_cast<double>(total_p) * std::log(2.0 * std::numbers::pi) + logdet;
  return (-0.5 * (constant + (quad_diag - correction).array())).matrix();
}

double gaussian_loglik(const CovarianceBlocks& blocks, std::span<const std::size_t> subset,
                       std::span<const Matrix> Y_test, std::span<const Vector> means) {
  return gaussian_loglik_rows(blocks, subset, Y_test, means).sum();
}

TTestResult paired_one_sided_t_test(std::span<const double> diffs) {
  if (diffs.size() < 2) throw Error(Errc::DegenerateInput, "paired t-test needs at least two differences");
  const double n = static_cast<double>(diffs.size());
  const double avg = stats::mean(diffs);
  double ss = 0.0;
  for (const double d : diffs) ss += (d - avg) * (d - avg);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw Error(Errc::DegenerateInput, "all differences are equal");
  TTestResult out;
  out.t = avg / (sd / std::sqrt(n));
  out.df = n - 1.0;
  out.p_value = stats::student_t_cdf(-out.t, out.df);
  return out;
}

}  // namespace fama::covariance
