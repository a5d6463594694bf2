#include "fama/intervals.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fama/error.hpp"
#include "fama/parallel.hpp"
#include "fama/stats.hpp"

namespace fama::intervals {

namespace {

// Fixed summation order so that dot(a, b) and dot(b, a) agree bitwise.
double row_dot(const Matrix& A, Index i, const Matrix& B, Index j) {
  double sum = 0.0;
  for (Index c = 0; c < A.cols(); ++c) sum += A(i, c) * B(j, c);
  return sum;
}

struct Operand {
  double sqnorm;
  double delta_sq;
  double rho;
};

double s_squared(const Operand& a, const Operand& b, double dot, bool same_entry) {
  if (same_entry) return 4.0 * a.delta_sq * a.sqnorm + 2.0 * a.sqnorm * a.sqnorm;
  return (b.delta_sq * a.sqnorm + a.delta_sq * b.sqnorm) + dot * dot + a.sqnorm * b.sqnorm;
}

double t_squared(const Operand& a, const Operand& b, bool same_entry) {
  if (same_entry) return 4.0 * (a.rho * a.rho) * a.delta_sq * a.sqnorm;
  return (b.rho * b.rho) * b.delta_sq * a.sqnorm + (a.rho * a.rho) * a.delta_sq * b.sqnorm;
}

void check_view(const FitArtifact& fit, std::size_t m) {
  if (m >= fit.posteriors.size()) {
    throw Error(Errc::IndexOutOfRange, "view " + std::to_string(m) + " does not exist");
  }
}

void check_variable(const FitArtifact& fit, std::size_t m, Index j) {
  check_view(fit, m);
  if (j < 0 || j >= fit.posteriors[m].p()) {
    throw Error(Errc::IndexOutOfRange, "variable " + std::to_string(j) + " of view " + std::to_string(m) +
                                           " does not exist");
  }
}

Operand operand(const FitArtifact& fit, std::size_t m, Index j, double rho) {
  const ViewPosterior& post = fit.posteriors[m];
  return {row_dot(post.lambda_hat, j, post.lambda_hat, j), post.delta_sq[j], rho};
}

IntervalResult make_result(const Operand& a, const Operand& b, double dot, bool same_entry, Method method,
                           double z, double sqrt_n) {
  const double scale = method == Method::Clt ? std::sqrt(s_squared(a, b, dot, same_entry))
                                             : std::sqrt(t_squared(a, b, same_entry));
  IntervalResult r;
  r.center = dot;
  r.se = scale / sqrt_n;
  r.half_width = z * r.se;
  r.method = method;
  return r;
}

}  // namespace

std::string_view method_name(Method method) { return method == Method::Clt ? "clt" : "bvm"; }

Method parse_method(std::string_view name) {
  if (name == "clt" || name == "CLT") return Method::Clt;
  if (name == "bvm" || name == "BVM") return Method::Bvm;
  throw Error(Errc::InvalidArgument, "unknown interval method '" + std::string(name) + "'");
}

double s_hat(const FitArtifact& fit, std::size_t m, std::size_t mp, Index j, Index jp) {
  check_variable(fit, m, j);
  check_variable(fit, mp, jp);
  const Operand a = operand(fit, m, j, 1.0);
  const Operand b = operand(fit, mp, jp, 1.0);
  const double dot = row_dot(fit.posteriors[m].lambda_hat, j, fit.posteriors[mp].lambda_hat, jp);
  return std::sqrt(s_squared(a, b, dot, m == mp && j == jp));
}

double t_hat(const FitArtifact& fit, std::size_t m, std::size_t mp, Index j, Index jp, double rho_m,
             double rho_mp) {
  check_variable(fit, m, j);
  check_variable(fit, mp, jp);
  return std::sqrt(t_squared(operand(fit, m, j, rho_m), operand(fit, mp, jp, rho_mp), m == mp && j == jp));
}

double critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  return -stats::normal_quantile(alpha / 2.0);
}

IntervalResult interval(const FitArtifact& fit, const IntervalRequest& req, bool unit_rho) {
  check_variable(fit, req.m, req.j);
  check_variable(fit, req.m_prime, req.j_prime);
  const double z = critical_value(req.alpha);
  const double rho_a = unit_rho ? 1.0 : fit.posteriors[req.m].rho;
  const double rho_b = unit_rho ? 1.0 : fit.posteriors[req.m_prime].rho;
  const Operand a = operand(fit, req.m, req.j, rho_a);
  const Operand b = operand(fit, req.m_prime, req.j_prime, rho_b);
  const double dot = row_dot(fit.posteriors[req.m].lambda_hat, req.j, fit.posteriors[req.m_prime].lambda_hat,
                             req.j_prime);
  return make_result(a, b, dot, req.m == req.m_prime && req.j == req.j_prime, req.method, z,
                     std::sqrt(static_cast<double>(fit.n)));
}

IntervalMatrix interval_matrix(const FitArtifact& fit, std::size_t m, std::size_t mp, double alpha, Method method,
                               std::vector<Index> rows, std::vector<Index> cols, bool unit_rho) {
  check_view(fit, m);
  check_view(fit, mp);
  if (rows.empty()) {
    rows.resize(static_cast<std::size_t>(fit.posteriors[m].p()));
    std::iota(rows.begin(), rows.end(), Index{0});
  }
  if (cols.empty()) {
    cols.resize(static_cast<std::size_t>(fit.posteriors[mp].p()));
    std::iota(cols.begin(), cols.end(), Index{0});
  }
  for (const Index j : rows) check_variable(fit, m, j);
  for (const Index j : cols) check_variable(fit, mp, j);

  const double z = critical_value(alpha);
  const double sqrt_n = std::sqrt(static_cast<double>(fit.n));
  const double rho_a = unit_rho ? 1.0 : fit.posteriors[m].rho;
  const double rho_b = unit_rho ? 1.0 : fit.posteriors[mp].rho;
  std::vector<Operand> left(rows.size()), right(cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) left[r] = operand(fit, m, rows[r], rho_a);
  for (std::size_t c = 0; c < cols.size(); ++c) right[c] = operand(fit, mp, cols[c], rho_b);

  IntervalMatrix out;
  out.m = m;
  out.m_prime = mp;
  out.alpha = alpha;
  out.method = method;
  out.entries.resize(rows.size() * cols.size());
  const Matrix& La = fit.posteriors[m].lambda_hat;
  const Matrix& Lb = fit.posteriors[mp].lambda_hat;
  parallel_for(rows.size(), [&](std::size_t r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double dot = row_dot(La, rows[r], Lb, cols[c]);
      out.entries[r * cols.size() + c] =
          make_result(left[r], right[c], dot, m == mp && rows[r] == cols[c], method, z, sqrt_n);
    }
  });
  out.rows = std::move(rows);
  out.cols = std::move(cols);
  return out;
}

}  // namespace fama::intervals
