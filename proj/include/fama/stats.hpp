#pragma once

#include <span>

namespace fama::stats {

double normal_cdf(double x);

/// Φ⁻¹(q) for q in (0, 1): Acklam's rational approximation followed by one
/// Halley step against erfc. Absolute error below 1e-9 over (1e-300, 1 − 1e-16).
double normal_quantile(double q);

/// Regularized incomplete beta I_x(a, b), Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

/// P(T ≤ t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// sup_x |F_n(x) − Φ(x)| for the empirical distribution of `sample`.
double ks_distance_normal(std::span<const double> sample);

double median(std::span<const double> values);
double mean(std::span<const double> values);

}  // namespace fama::stats
