#include "fama/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fama/error.hpp"
#include "fama/parallel.hpp"
#include "fama/random.hpp"

namespace fama::posterior {

namespace {

constexpr std::uint64_t kSampleTag = 0x4e49475f44524157ull;   // "NIG_DRAW"
constexpr std::uint64_t kPairTag = 0x52484f5f50414952ull;     // "RHO_PAIR"
constexpr std::uint64_t kPairChunks = 64;

double pair_factor(double n2_a, double n2_b, double dot, double d_a, double d_b) {
  const double num = n2_a * n2_b + dot * dot;
  const double den = d_a * n2_b + d_b * n2_a;
  if (den == 0.0) return 1.0;  // both loadings vanish: limiting value
  return std::sqrt(1.0 + num / den);
}

double diag_factor(double n2, double d) { return std::sqrt(1.0 + n2 / (2.0 * d)); }

}  // namespace

double tune_prior_variance(const Matrix& Y, const Matrix& U, Index k) {
  if (U.rows() != Y.rows()) throw Error(Errc::DimensionMismatch, "basis and data differ in row count");
  if (k < 1) throw Error(Errc::InvalidArgument, "k must be positive");
  const double n = static_cast<double>(Y.rows());
  const Matrix coeffs = U.transpose() * Y;
  const double signal = coeffs.squaredNorm() / n;
  const double residual = (Y - U * coeffs).squaredNorm() / n;
  if (residual < 1e-12) {
    throw Error(Errc::DegenerateVariance, "residual variance " + std::to_string(residual) + " below 1e-12");
  }
  return signal / (static_cast<double>(k) * residual);
}

ViewPosterior nig_posterior(const Matrix& Y, const Matrix& F_hat, double tau_sq, const NigPrior& prior) {
  if (F_hat.rows() != Y.rows()) throw Error(Errc::DimensionMismatch, "factors and data differ in row count");
  if (!(tau_sq > 0.0) || !(prior.nu0 > 0.0) || !(prior.sigma0_sq > 0.0)) {
    throw Error(Errc::InvalidArgument, "tau_sq, nu0 and sigma0_sq must be positive");
  }
  const Index n = Y.rows();
  const double nd = static_cast<double>(n);
  const Matrix gram = F_hat.transpose() * F_hat / nd;
  if ((gram - Matrix::Identity(F_hat.cols(), F_hat.cols())).cwiseAbs().maxCoeff() > 1e-6) {
    throw Error(Errc::NonOrthogonalFactors, "F_hat^T F_hat must equal n I");
  }

  const double precision = nd + 1.0 / tau_sq;
  ViewPosterior post;
  post.tau_sq = tau_sq;
  post.nu0 = prior.nu0;
  post.sigma0_sq = prior.sigma0_sq;
  post.nu_n = prior.nu0 + nd;
  post.K_scalar = 1.0 / precision;
  post.lambda_hat = (Y.transpose() * F_hat) / precision;

  const Vector colsq = Y.colwise().squaredNorm().transpose();
  const Vector fitted = precision * post.lambda_hat.rowwise().squaredNorm();
  post.delta_sq = ((prior.nu0 * prior.sigma0_sq + colsq.array() - fitted.array()) / post.nu_n).matrix();
  for (Index j = 0; j < post.delta_sq.size(); ++j) {
    if (!(post.delta_sq[j] > 0.0)) {
      throw Error(Errc::NegativeDelta, "delta^2 of variable " + std::to_string(j) + " is not positive");
    }
  }
  return post;
}

double inflation_factor(const ViewPosterior& post, Index j, Index jp) {
  const auto a = post.lambda_hat.row(j);
  const double n2a = a.squaredNorm();
  if (j == jp) return diag_factor(n2a, post.delta_sq[j]);
  const auto b = post.lambda_hat.row(jp);
  return pair_factor(n2a, b.squaredNorm(), a.dot(b), post.delta_sq[j], post.delta_sq[jp]);
}

InflationReport inflation_factors(const ViewPosterior& post, const InflationOptions& options) {
  const Index p = post.p();
  const Vector n2 = post.lambda_hat.rowwise().squaredNorm();
  const Vector& d = post.delta_sq;
  const double pd = static_cast<double>(p);
  const double summed_terms = pd * (pd + 1.0) / 2.0;
  const double normalizer = (options.exact_term_count || p < 2) ? summed_terms : pd * (pd - 1.0) / 2.0;

  InflationReport report;
  double diag_sum = 0.0;
  double max_b = 1.0;
  for (Index j = 0; j < p; ++j) {
    const double b = diag_factor(n2[j], d[j]);
    diag_sum += b;
    max_b = std::max(max_b, b);
  }

  if (p > options.subsample_above) {
    report.subsampled = true;
    std::vector<double> chunk_sum(kPairChunks, 0.0), chunk_max(kPairChunks, 1.0);
    const std::uint64_t per_chunk = (options.subsample_pairs + kPairChunks - 1) / kPairChunks;
    parallel_for(kPairChunks, [&](std::size_t c) {
      RandomStream rng(options.seed, derive_stream({kPairTag, c}));
      const auto up = static_cast<std::uint64_t>(p);
      for (std::uint64_t s = 0; s < per_chunk; ++s) {
        const auto j = static_cast<Index>(rng.below(up));
        auto jp = static_cast<Index>(rng.below(up - 1));
        if (jp >= j) ++jp;
        const double b = pair_factor(n2[j], n2[jp], post.lambda_hat.row(j).dot(post.lambda_hat.row(jp)), d[j], d[jp]);
        chunk_sum[c] += b;
        chunk_max[c] = std::max(chunk_max[c], b);
      }
    });
    double total = 0.0;
    for (std::size_t c = 0; c < kPairChunks; ++c) {
      total += chunk_sum[c];
      max_b = std::max(max_b, chunk_max[c]);
    }
    const double mean_off = total / static_cast<double>(per_chunk * kPairChunks);
    report.rho = (diag_sum + mean_off * pd * (pd - 1.0) / 2.0) / normalizer;
    report.rho_max = max_b;
    return report;
  }

  if (options.keep_matrix) report.b = Matrix::Zero(p, p);
  std::vector<double> row_sum(static_cast<std::size_t>(p), 0.0), row_max(static_cast<std::size_t>(p), 1.0);
  parallel_for(static_cast<std::size_t>(p), [&](std::size_t js) {
    const auto j = static_cast<Index>(js);
    if (options.keep_matrix) report.b(j, j) = diag_factor(n2[j], d[j]);
    if (j + 1 == p) return;
    const Vector dots = post.lambda_hat.bottomRows(p - j - 1) * post.lambda_hat.row(j).transpose();
    double sum = 0.0, mx = 1.0;
    for (Index i = 0; i < dots.size(); ++i) {
      const Index jp = j + 1 + i;
      const double b = pair_factor(n2[j], n2[jp], dots[i], d[j], d[jp]);
      sum += b;
      mx = std::max(mx, b);
      if (options.keep_matrix) {
        report.b(j, jp) = b;
        report.b(jp, j) = b;
      }
    }
    row_sum[js] = sum;
    row_max[js] = mx;
  });
  double off_sum = 0.0;
  for (std::size_t j = 0; j < row_sum.size(); ++j) {
    off_sum += row_sum[j];
    max_b = std::max(max_b, row_max[j]);
  }
  report.rho = (diag_sum + off_sum) / normalizer;
  report.rho_max = max_b;
  return report;
}

PosteriorSampler::PosteriorSampler(const ViewPosterior& post, double rho, std::uint64_t seed,
                                   std::uint64_t view_index)
    : post_(post), rho_(rho), seed_(seed), view_(view_index) {}

PosteriorSample PosteriorSampler::draw(std::uint64_t t) const {
  const Index p = post_.p();
  const Index k0 = post_.k0();
  PosteriorSample out{Matrix(p, k0), Vector(p)};
  const double shape = post_.nu_n / 2.0;
  parallel_for(static_cast<std::size_t>(p), [&](std::size_t js) {
    const auto j = static_cast<Index>(js);
    RandomStream rng(seed_, derive_stream({kSampleTag, view_, js, t}));
    const double sigma_sq = rng.inverse_gamma(shape, post_.nu_n * post_.delta_sq[j] / 2.0);
    const double sd = rho_ * std::sqrt(sigma_sq * post_.K_scalar);
    out.sigma_tilde_sq[j] = sigma_sq;
    for (Index c = 0; c < k0; ++c) out.lambda_tilde(j, c) = post_.lambda_hat(j, c) + sd * rng.normal();
  });
  return out;
}

std::vector<PosteriorSample> sample_posterior(const ViewPosterior& post, double rho, std::size_t n_samples,
                                              std::uint64_t seed, std::uint64_t view_index) {
  if (n_samples < 1) throw Error(Errc::InvalidArgument, "n_samples must be at least 1");
  PosteriorSampler sampler(post, rho, seed, view_index);
  std::vector<PosteriorSample> draws;
  draws.reserve(n_samples);
  for (std::size_t t = 0; t < n_samples; ++t) draws.push_back(sampler.draw(t));
  return draws;
}

}  // namespace fama::posterior
