#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fama/covariance.hpp"
#include "fama/error.hpp"
#include "fama/stats.hpp"
#include "support.hpp"

using namespace fama;
using fama::testing::gaussian_matrix;
using fama::testing::gaussian_vector;

namespace {

covariance::CovarianceBlocks random_blocks(const std::vector<Index>& p, Index k, std::uint64_t seed) {
  covariance::CovarianceBlocks blocks;
  for (std::size_t m = 0; m < p.size(); ++m) {
    blocks.loadings.push_back(gaussian_matrix(p[m], k, seed + 10 * m));
    blocks.psi.push_back(gaussian_vector(p[m], seed + 10 * m + 1).cwiseAbs().array() + 0.2);
  }
  return blocks;
}

// Dense joint covariance of the views in `subset`, in subset order.
Matrix dense_joint(const covariance::CovarianceBlocks& blocks, const std::vector<std::size_t>& subset) {
  Matrix L(0, blocks.loadings.front().cols());
  Vector psi(0);
  for (const auto m : subset) {
    Matrix L2(L.rows() + blocks.loadings[m].rows(), L.cols());
    L2 << L, blocks.loadings[m];
    L = L2;
    Vector psi2(psi.size() + blocks.psi[m].size());
    psi2 << psi, blocks.psi[m];
    psi = psi2;
  }
  Matrix S = L * L.transpose();
  S.diagonal() += psi;
  return S;
}

// Dense log-density through a Cholesky factor of the full covariance.
double dense_logpdf(const Matrix& S, const Vector& y) {
  Eigen::LLT<Matrix> llt(S);
  const Matrix Lc = llt.matrixL();
  const Vector z = Lc.triangularView<Eigen::Lower>().solve(y);
  const double logdet = 2.0 * Lc.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

FitArtifact hand_fit(std::vector<Matrix> lambdas, std::vector<Vector> deltas, double nu_n) {
  FitArtifact fit;
  for (std::size_t m = 0; m < lambdas.size(); ++m) {
    ViewPosterior post;
    post.lambda_hat = lambdas[m];
    post.delta_sq = deltas[m];
    post.nu_n = nu_n;
    fit.posteriors.push_back(post);
  }
  return fit;
}

}  // namespace

TEST(PointEstimates, ResidualPlugIns) {
  const auto fit = hand_fit({Matrix::Zero(3, 2)}, {Vector::Constant(3, 2.0)}, 102.0);
  const auto mean = covariance::point_estimates(fit);
  EXPECT_NEAR(mean.psi[0][0], 2.04, 1e-14);
  EXPECT_LE((mean.intra(0) - 2.04 * Matrix::Identity(3, 3)).norm(), 1e-14);
  covariance::CovarianceOptions delta;
  delta.residual = covariance::ResidualPlugIn::Delta;
  EXPECT_EQ(covariance::point_estimates(fit, delta).psi[0][0], 2.0);
  EXPECT_THROW(covariance::point_estimates(hand_fit({Matrix::Zero(1, 1)}, {Vector::Ones(1)}, 2.0)), Error);
}

TEST(PointEstimates, InterBlockTransposeIsExact) {
  const auto blocks = random_blocks({7, 5, 4}, 3, 1);
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t mp = 0; mp < 3; ++mp) {
      if (m == mp) continue;
      const Matrix a = blocks.inter(m, mp), b = blocks.inter(mp, m);
      EXPECT_TRUE(a == b.transpose());
    }
  }
}

TEST(PointEstimates, SingleViewLowNoiseRecoversLowRankPart) {
  const Index n = 1000, p = 300, k = 3;
  const Matrix F0 = gaussian_matrix(n, k, 2);
  const Matrix L0 = gaussian_matrix(p, k, 3);
  MultiViewDataset data;
  data.views.push_back(F0 * L0.transpose() + gaussian_matrix(n, p, 4, 0.1));
  data.view_names = {"v"};
  FitOptions opts;
  opts.k_per_view = std::vector<Index>{k};
  opts.k0 = k;
  const auto fit = fama::fit(data, opts);
  const auto blocks = covariance::point_estimates(fit);
  const Matrix truth = L0 * L0.transpose();
  EXPECT_LE((blocks.intra_lowrank(0) - truth).norm() / truth.norm(), 0.1);
}

TEST(ConditionalPrediction, NoSharedFactorsGivesMarginal) {
  covariance::CovarianceBlocks blocks;
  Matrix La = Matrix::Zero(4, 2), Lb = Matrix::Zero(3, 2);
  La.col(0) = gaussian_vector(4, 5);
  Lb.col(1) = gaussian_vector(3, 6);
  blocks.loadings = {La, Lb};
  blocks.psi = {Vector::Constant(4, 0.5), Vector::Constant(3, 1.5)};
  const auto cond = covariance::conditional_prediction(blocks, 1, gaussian_vector(3, 7), 0);
  EXPECT_LE(cond.mean.norm(), 1e-14);
  EXPECT_LE((cond.covariance() - blocks.intra(0)).norm(), 1e-12);
}

TEST(ConditionalPrediction, ZeroObservationGivesZeroMean) {
  const auto blocks = random_blocks({5, 4}, 2, 8);
  EXPECT_EQ(covariance::conditional_prediction(blocks, 0, Vector::Zero(5), 1).mean.norm(), 0.0);
}

TEST(ConditionalPrediction, ToyMatchesExplicitTwoByTwo) {
  covariance::CovarianceBlocks blocks;
  Matrix Lt(2, 1), Lg(2, 1);
  Lt << 0.7, -1.2;
  Lg << 1.5, 0.4;
  blocks.loadings = {Lt, Lg};
  Vector pt(2), pg(2);
  pt << 0.3, 0.9;
  pg << 0.8, 0.25;
  blocks.psi = {pt, pg};
  Vector y(2);
  y << 1.1, -0.6;
  // Σ_gg = [[1.5² + 0.8, 0.6], [0.6, 0.4² + 0.25]], inverted by hand.
  const double a = 2.25 + 0.8, b = 0.6, d = 0.16 + 0.25;
  const double det = a * d - b * b;
  Matrix inv(2, 2);
  inv << d / det, -b / det, -b / det, a / det;
  const Matrix cross = Lt * Lg.transpose();
  const Vector mu = cross * inv * y;
  Matrix S = Lt * Lt.transpose();
  S.diagonal() += pt;
  const Matrix cov = S - cross * inv * cross.transpose();
  const auto cond = covariance::conditional_prediction(blocks, 1, y, 0);
  EXPECT_LE((cond.mean - mu).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((cond.covariance() - cov).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ConditionalPrediction, WoodburyMatchesDense) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index pa = 10 + 2 * static_cast<Index>(seed), pb = 60 - static_cast<Index>(seed);
    const auto blocks = random_blocks({pa, pb}, 1 + seed % 5, 100 + seed);
    const Vector y = gaussian_vector(pb, 200 + seed);
    const Matrix Sgg = dense_joint(blocks, {1});
    const Matrix cross = blocks.inter(0, 1);
    const Matrix solve = Sgg.llt().solve(Matrix::Identity(pb, pb));
    const Vector mu = cross * solve * y;
    const Matrix cov = blocks.intra(0) - cross * solve * cross.transpose();
    const auto cond = covariance::conditional_prediction(blocks, 1, y, 0);
    EXPECT_LE((cond.mean - mu).norm(), 1e-9 * std::max(1.0, mu.norm())) << seed;
    EXPECT_LE((cond.covariance() - cov).norm(), 1e-9 * cov.norm()) << seed;
    // Conditioning never increases covariance.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(blocks.intra(0) - cond.covariance());
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8) << seed;
  }
}

TEST(ConditionalPrediction, BatchMatchesSingleRows) {
  const auto blocks = random_blocks({6, 8}, 3, 9);
  const Matrix Y = gaussian_matrix(5, 8, 10);
  const Matrix means = covariance::conditional_means(blocks, 1, Y, 0);
  for (Index i = 0; i < 5; ++i) {
    const Vector single = covariance::conditional_prediction(blocks, 1, Y.row(i).transpose(), 0).mean;
    EXPECT_LE((means.row(i).transpose() - single).norm(), 1e-12);
  }
}

TEST(ConditionalPrediction, Errors) {
  const auto blocks = random_blocks({3, 4}, 2, 11);
  EXPECT_THROW(covariance::conditional_prediction(blocks, 0, Vector::Zero(3), 0), Error);
  EXPECT_THROW(covariance::conditional_prediction(blocks, 1, Vector::Zero(3), 0), Error);
  Vector bad = Vector::Zero(4);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(covariance::conditional_prediction(blocks, 1, bad, 0), Error);
}

TEST(GaussianLoglik, StandardNormalCase) {
  covariance::CovarianceBlocks blocks;
  blocks.loadings = {Matrix::Zero(3, 2)};
  blocks.psi = {Vector::Ones(3)};
  const Matrix Y = gaussian_matrix(4, 3, 12);
  const std::vector<std::size_t> subset{0};
  const std::vector<Matrix> test{Y};
  const double expected = -0.5 * 12.0 * std::log(2.0 * std::numbers::pi) - 0.5 * Y.squaredNorm();
  EXPECT_NEAR(covariance::gaussian_loglik(blocks, subset, test), expected, 1e-12);
}

TEST(GaussianLoglik, ToyMatchesDenseCholesky) {
  const auto blocks = random_blocks({3}, 1, 13);
  const Matrix Y = gaussian_matrix(4, 3, 14);
  const std::vector<std::size_t> subset{0};
  const std::vector<Matrix> test{Y};
  const Matrix S = dense_joint(blocks, subset);
  double expected = 0.0;
  for (Index i = 0; i < 4; ++i) expected += dense_logpdf(S, Y.row(i).transpose());
  EXPECT_NEAR(covariance::gaussian_loglik(blocks, subset, test), expected, 1e-10);
}

TEST(GaussianLoglik, LowRankMatchesDenseOnSubsets) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto blocks = random_blocks({20, 15, 25}, 1 + seed % 4, 300 + seed);
    const std::vector<std::vector<std::size_t>> subsets{{0}, {2, 0}, {0, 1, 2}, {1, 2}};
    for (const auto& subset : subsets) {
      std::vector<Matrix> test;
      std::vector<Vector> means;
      Index p = 0;
      for (const auto m : subset) {
        test.push_back(gaussian_matrix(7, blocks.loadings[m].rows(), 400 + seed + m));
        means.push_back(gaussian_vector(blocks.loadings[m].rows(), 500 + seed + m, 0.3));
        p += blocks.loadings[m].rows();
      }
      const Matrix S = dense_joint(blocks, subset);
      const Vector rows = covariance::gaussian_loglik_rows(blocks, subset, test, means);
      for (Index i = 0; i < 7; ++i) {
        Vector y(p);
        Index offset = 0;
        for (std::size_t s = 0; s < subset.size(); ++s) {
          const Index pm = test[s].cols();
          y.segment(offset, pm) = test[s].row(i).transpose() - means[s];
          offset += pm;
        }
        const double expected = dense_logpdf(S, y);
        EXPECT_NEAR(rows[i], expected, 1e-9 * std::abs(expected)) << "seed " << seed;
      }
    }
  }
}

TEST(GaussianLoglik, InvariantToRowPermutation) {
  const auto blocks = random_blocks({6, 4}, 2, 15);
  const std::vector<std::size_t> subset{0, 1};
  const Matrix A = gaussian_matrix(9, 6, 16), B = gaussian_matrix(9, 4, 17);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(9);
  perm.indices() << 4, 8, 0, 2, 7, 1, 3, 6, 5;
  const std::vector<Matrix> plain{A, B}, shuffled{perm * A, perm * B};
  EXPECT_NEAR(covariance::gaussian_loglik(blocks, subset, plain), covariance::gaussian_loglik(blocks, subset, shuffled),
              1e-10);
}

TEST(GaussianLoglik, SingleViewSubsetIsConsistent) {
  const auto blocks = random_blocks({6, 4}, 2, 18);
  const Matrix A = gaussian_matrix(5, 6, 19);
  const std::vector<std::size_t> only{0};
  const std::vector<Matrix> test{A};
  const Vector rows = covariance::gaussian_loglik_rows(blocks, only, test);
  EXPECT_EQ(rows.sum(), covariance::gaussian_loglik(blocks, only, test));
  // The marginal of one view is the same with or without other views in the blocks.
  covariance::CovarianceBlocks alone;
  alone.loadings = {blocks.loadings[0]};
  alone.psi = {blocks.psi[0]};
  EXPECT_EQ(covariance::gaussian_loglik_rows(alone, only, test), rows);
}

TEST(GaussianLoglik, DimensionMismatch) {
  const auto blocks = random_blocks({6, 4}, 2, 20);
  const std::vector<std::size_t> subset{0};
  const std::vector<Matrix> wrong{gaussian_matrix(3, 4, 21)};
  EXPECT_THROW(covariance::gaussian_loglik(blocks, subset, wrong), Error);
}

TEST(PairedTTest, LimitingCases) {
  std::vector<double> up;
  for (int i = 0; i < 20; ++i) up.push_back(1.0 + 1e-6 * (i % 3));
  EXPECT_LT(covariance::paired_one_sided_t_test(up).p_value, 1e-12);
  const std::vector<double> alternating{1.0, -1.0, 1.0, -1.0, 1.0, -1.0};
  const auto r = covariance::paired_one_sided_t_test(alternating);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_NEAR(r.p_value, 0.5, 1e-15);
  EXPECT_THROW(covariance::paired_one_sided_t_test(std::vector<double>{1.0}), Error);
  EXPECT_THROW(covariance::paired_one_sided_t_test(std::vector<double>{2.0, 2.0, 2.0}), Error);
}

TEST(PairedTTest, MatchesIntegratedTDensity) {
  const std::vector<double> d{0.31, -0.12, 0.54, 0.08, 0.77, -0.2, 0.45, 0.13, 0.02, 0.36};
  const double n = 10.0;
  const double mean = stats::mean(d);
  double ss = 0.0;
  for (const double x : d) ss += (x - mean) * (x - mean);
  const double t = mean / std::sqrt(ss / (n - 1.0) / n);
  // Upper tail by Simpson integration of the t(9) density from t to 60 plus a
  // negligible remainder.
  const double df = 9.0;
  const double c = std::exp(std::lgamma(5.0) - std::lgamma(4.5)) / std::sqrt(df * std::numbers::pi);
  auto density = [&](double x) { return c * std::pow(1.0 + x * x / df, -5.0); };
  const int steps = 400000;
  const double hi = 200.0, h = (hi - t) / steps;
  double sum = density(t) + density(hi);
  for (int i = 1; i < steps; ++i) sum += density(t + i * h) * (i % 2 ? 4.0 : 2.0);
  const double expected = sum * h / 3.0;
  const auto r = covariance::paired_one_sided_t_test(d);
  EXPECT_NEAR(r.t, t, 1e-12);
  EXPECT_EQ(r.df, 9.0);
  EXPECT_NEAR(r.p_value, expected, 1e-6);
}
