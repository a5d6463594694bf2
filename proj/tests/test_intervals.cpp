#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fama/error.hpp"
#include "fama/intervals.hpp"
#include "support.hpp"

using namespace fama;
using fama::testing::gaussian_matrix;
using fama::testing::gaussian_vector;

namespace {

FitArtifact hand_fit(std::vector<Matrix> lambdas, std::vector<Vector> deltas, Index n = 100,
                     std::vector<double> rhos = {}) {
  FitArtifact fit;
  fit.n = n;
  for (std::size_t m = 0; m < lambdas.size(); ++m) {
    ViewPosterior post;
    post.lambda_hat = lambdas[m];
    post.delta_sq = deltas[m];
    post.rho = rhos.empty() ? 1.0 : rhos[m];
    fit.posteriors.push_back(post);
  }
  return fit;
}

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix A(static_cast<Index>(values.size()), static_cast<Index>(values.begin()->size()));
  Index i = 0;
  for (const auto& r : values) {
    Index j = 0;
    for (const double v : r) A(i, j++) = v;
    ++i;
  }
  return A;
}

}  // namespace

TEST(SHat, HandExamples) {
  const auto fit = hand_fit({rows({{0, 0}, {1, 0}, {0, 1}})}, {Vector::Ones(3)});
  EXPECT_EQ(intervals::s_hat(fit, 0, 0, 0, 0), 0.0);
  EXPECT_NEAR(intervals::s_hat(fit, 0, 0, 1, 2), std::sqrt(3.0), 1e-15);

  const auto fit2 = hand_fit({rows({{1, 0}})}, {Vector::Constant(1, 2.0)});
  EXPECT_NEAR(intervals::s_hat(fit2, 0, 0, 0, 0), std::sqrt(10.0), 1e-15);
}

TEST(SHat, CrossViewUsesOffDiagonalForm) {
  const auto fit = hand_fit({rows({{1, 2}}), rows({{3, -1}})}, {Vector::Constant(1, 0.5), Vector::Constant(1, 2.0)});
  // δ'²‖a‖² + δ²‖b‖² + (aᵀb)² + ‖a‖²‖b‖² = 2·5 + 0.5·10 + 1 + 50
  EXPECT_NEAR(intervals::s_hat(fit, 0, 1, 0, 0), std::sqrt(66.0), 1e-14);
  EXPECT_EQ(intervals::s_hat(fit, 0, 1, 0, 0), intervals::s_hat(fit, 1, 0, 0, 0));
}

TEST(THat, HandExamples) {
  const auto zero = hand_fit({Matrix::Zero(1, 2)}, {Vector::Ones(1)});
  EXPECT_EQ(intervals::t_hat(zero, 0, 0, 0, 0, 1.0, 1.0), 0.0);

  Matrix a(1, 3);
  a << 1.0, 1.0, 1.0;
  const auto fit = hand_fit({a}, {Vector::Ones(1)});
  EXPECT_NEAR(intervals::t_hat(fit, 0, 0, 0, 0, 2.0, 2.0), std::sqrt(48.0), 1e-14);

  const auto cross = hand_fit({rows({{1, 0}}), rows({{0, 1}})}, {Vector::Ones(1), Vector::Ones(1)});
  EXPECT_NEAR(intervals::t_hat(cross, 0, 1, 0, 0, 1.0, 1.0), std::sqrt(2.0), 1e-15);
}

TEST(THat, RhoWeightsFollowTheOtherView) {
  const auto fit = hand_fit({rows({{1, 0}}), rows({{0, 2}})}, {Vector::Constant(1, 3.0), Vector::Constant(1, 5.0)});
  // ρ'²δ'²‖a‖² + ρ²δ²‖b‖²
  const double expected = 4.0 * 5.0 * 1.0 + 9.0 * 3.0 * 4.0;
  EXPECT_NEAR(intervals::t_hat(fit, 0, 1, 0, 0, 3.0, 2.0), std::sqrt(expected), 1e-13);
}

TEST(Interval, CriticalValueAndWidth) {
  EXPECT_NEAR(intervals::critical_value(0.05), 1.959963985, 1e-8);
  const auto fit = hand_fit({rows({{1, 0}, {0, 1}})}, {Vector::Ones(2)}, 400);
  const auto r = intervals::interval(fit, {0, 0, 0, 1, 0.05, intervals::Method::Clt});
  EXPECT_EQ(r.center, 0.0);
  EXPECT_NEAR(r.se, std::sqrt(3.0) / 20.0, 1e-15);
  EXPECT_NEAR(r.half_width, intervals::critical_value(0.05) * std::sqrt(3.0) / 20.0, 1e-15);
  EXPECT_LE(r.lo(), r.center);
  EXPECT_GE(r.hi(), r.center);
}

TEST(Interval, ZeroScaleIsDegenerate) {
  const auto fit = hand_fit({Matrix::Zero(2, 2)}, {Vector::Ones(2)});
  const auto r = intervals::interval(fit, {0, 0, 1, 1, 0.05, intervals::Method::Clt});
  EXPECT_EQ(r.lo(), r.hi());
  EXPECT_EQ(r.lo(), r.center);
}

TEST(Interval, BvmUsesFittedRhoUnlessUnit) {
  const auto fit = hand_fit({rows({{1, 1}})}, {Vector::Ones(1)}, 100, {2.0});
  const auto tuned = intervals::interval(fit, {0, 0, 0, 0, 0.05, intervals::Method::Bvm});
  const auto unit = intervals::interval(fit, {0, 0, 0, 0, 0.05, intervals::Method::Bvm}, true);
  EXPECT_NEAR(tuned.se, intervals::t_hat(fit, 0, 0, 0, 0, 2.0, 2.0) / 10.0, 1e-15);
  EXPECT_NEAR(unit.se, intervals::t_hat(fit, 0, 0, 0, 0, 1.0, 1.0) / 10.0, 1e-15);
  EXPECT_NEAR(tuned.half_width, 2.0 * unit.half_width, 1e-14);
}

TEST(Interval, SymmetricInPairOrder) {
  const auto fit = hand_fit({gaussian_matrix(6, 3, 1)}, {gaussian_vector(6, 2).cwiseAbs()}, 150, {1.3});
  for (const auto method : {intervals::Method::Clt, intervals::Method::Bvm}) {
    for (Index j = 0; j < 6; ++j) {
      for (Index jp = 0; jp < 6; ++jp) {
        const auto a = intervals::interval(fit, {0, 0, j, jp, 0.05, method});
        const auto b = intervals::interval(fit, {0, 0, jp, j, 0.05, method});
        EXPECT_EQ(a.center, b.center);
        EXPECT_EQ(a.half_width, b.half_width);
      }
    }
  }
}

TEST(Interval, MonotoneInAlpha) {
  const auto fit = hand_fit({gaussian_matrix(3, 2, 3)}, {Vector::Ones(3)});
  double previous = std::numeric_limits<double>::infinity();
  for (const double alpha : {0.001, 0.01, 0.05, 0.1, 0.3, 0.9}) {
    const auto r = intervals::interval(fit, {0, 0, 0, 2, alpha, intervals::Method::Clt});
    EXPECT_LE(r.half_width, previous);
    previous = r.half_width;
  }
}

TEST(Interval, IndexErrors) {
  const auto fit = hand_fit({gaussian_matrix(3, 2, 4)}, {Vector::Ones(3)});
  EXPECT_THROW(intervals::interval(fit, {0, 0, 0, 3, 0.05, intervals::Method::Clt}), Error);
  EXPECT_THROW(intervals::interval(fit, {1, 0, 0, 0, 0.05, intervals::Method::Clt}), Error);
  EXPECT_THROW(intervals::s_hat(fit, 0, 0, -1, 0), Error);
  EXPECT_THROW(intervals::parse_method("wald"), Error);
}

TEST(IntervalMatrix, MatchesScalarLoopBitExactly) {
  const auto fit = hand_fit({gaussian_matrix(20, 4, 5), gaussian_matrix(12, 4, 6)},
                            {gaussian_vector(20, 7).cwiseAbs(), gaussian_vector(12, 8).cwiseAbs()}, 200, {1.4, 1.1});
  for (const auto method : {intervals::Method::Clt, intervals::Method::Bvm}) {
    for (const auto [m, mp] : {std::pair<std::size_t, std::size_t>{0, 0}, {0, 1}, {1, 0}}) {
      const auto mat = intervals::interval_matrix(fit, m, mp, 0.1, method);
      const Index p = fit.posteriors[m].p(), pp = fit.posteriors[mp].p();
      ASSERT_EQ(mat.entries.size(), static_cast<std::size_t>(p * pp));
      for (Index j = 0; j < p; ++j) {
        for (Index jp = 0; jp < pp; ++jp) {
          const auto r = intervals::interval(fit, {m, mp, j, jp, 0.1, method});
          const auto& e = mat.at(static_cast<std::size_t>(j), static_cast<std::size_t>(jp));
          EXPECT_EQ(e.center, r.center);
          EXPECT_EQ(e.half_width, r.half_width);
          EXPECT_EQ(e.se, r.se);
        }
      }
    }
  }
}

TEST(IntervalMatrix, SubsetAndDiagonalDispatch) {
  const auto fit = hand_fit({gaussian_matrix(8, 3, 9)}, {Vector::Constant(8, 0.7)});
  const auto one = intervals::interval_matrix(fit, 0, 0, 0.05, intervals::Method::Clt, {3}, {5});
  ASSERT_EQ(one.entries.size(), 1u);
  EXPECT_EQ(one.entries[0].half_width,
            intervals::interval(fit, {0, 0, 3, 5, 0.05, intervals::Method::Clt}).half_width);
  const auto diag = intervals::interval_matrix(fit, 0, 0, 0.05, intervals::Method::Clt, {2, 4}, {2, 4});
  EXPECT_NEAR(diag.at(0, 0).se * std::sqrt(100.0), intervals::s_hat(fit, 0, 0, 2, 2), 1e-15);
  EXPECT_NEAR(diag.at(1, 1).se * std::sqrt(100.0), intervals::s_hat(fit, 0, 0, 4, 4), 1e-15);
  EXPECT_THROW(intervals::interval_matrix(fit, 0, 0, 0.05, intervals::Method::Clt, {8}, {}), Error);
}
