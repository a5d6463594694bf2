#pragma once

#include <string_view>
#include <vector>

#include "fama/types.hpp"

namespace fama::intervals {

/// Clt: confidence interval from the plug-in CLT standard error Ŝ.
/// Bvm: Gaussian approximation of the coverage-corrected credible interval (T̂).
enum class Method { Clt, Bvm };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

struct IntervalRequest {
  std::size_t m = 0;
  std::size_t m_prime = 0;
  Index j = 0;
  Index j_prime = 0;
  double alpha = 0.05;
  Method method = Method::Clt;
};

struct IntervalResult {
  double center = 0.0;      // λ̂_{mj}ᵀ λ̂_{m'j'}
  double half_width = 0.0;
  double se = 0.0;          // Ŝ/√n or T̂/√n
  Method method = Method::Clt;

  double lo() const { return center - half_width; }
  double hi() const { return center + half_width; }
};

/// Plug-in CLT scale Ŝ_{mm'jj'} (δ² and λ̂ in place of the true parameters).
double s_hat(const FitArtifact& fit, std::size_t m, std::size_t m_prime, Index j, Index j_prime);

/// Plug-in BvM scale T̂_{mm'jj'}(ρ_m, ρ_m').
double t_hat(const FitArtifact& fit, std::size_t m, std::size_t m_prime, Index j, Index j_prime, double rho_m,
             double rho_m_prime);

/// z_{1−α/2}.
double critical_value(double alpha);

/// BvM intervals use the fitted ρ of each view unless `unit_rho` is set.
IntervalResult interval(const FitArtifact& fit, const IntervalRequest& request, bool unit_rho = false);

struct IntervalMatrix {
  std::size_t m = 0;
  std::size_t m_prime = 0;
  double alpha = 0.05;
  Method method = Method::Clt;
  std::vector<Index> rows;
  std::vector<Index> cols;
  std::vector<IntervalResult> entries;  // row-major, rows.size() × cols.size()

  const IntervalResult& at(std::size_t r, std::size_t c) const { return entries[r * cols.size() + c]; }
};

/// Intervals for every (rows[r], cols[c]) entry of block (m, m'). Empty
/// `rows`/`cols` select all variables of the respective view.
IntervalMatrix interval_matrix(const FitArtifact& fit, std::size_t m, std::size_t m_prime, double alpha,
                               Method method, std::vector<Index> rows = {}, std::vector<Index> cols = {},
                               bool unit_rho = false);

}  // namespace fama::intervals
