#pragma once

#include <cstdint>
#include <random>

#include "fama/pipeline.hpp"
#include "fama/types.hpp"

namespace fama::testing {

inline Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, scale);
  Matrix A(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) A(i, j) = dist(gen);
  }
  return A;
}

inline Vector gaussian_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  return gaussian_matrix(n, 1, seed, scale).col(0);
}

inline Matrix orthonormal_columns(Index rows, Index cols, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rows, cols, seed));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

/// Views Y_m = F L_mᵀ + noise with every view loading on all k factors.
inline MultiViewDataset factor_dataset(Index n, const std::vector<Index>& p, Index k, double noise,
                                       std::uint64_t seed) {
  const Matrix F = gaussian_matrix(n, k, seed);
  MultiViewDataset data;
  for (std::size_t m = 0; m < p.size(); ++m) {
    const Matrix L = gaussian_matrix(p[m], k, seed + 100 + m);
    data.views.push_back(F * L.transpose() + gaussian_matrix(n, p[m], seed + 200 + m, noise));
    data.view_names.push_back("v" + std::to_string(m));
  }
  return data;
}

/// A small fitted artifact with known ranks, for tests that need a FitArtifact.
inline FitArtifact small_fit(std::uint64_t seed, Index n = 120, std::vector<Index> p = {25, 30}, Index k = 3) {
  const auto data = factor_dataset(n, p, k, 1.0, seed);
  FitOptions options;
  options.k_per_view = std::vector<Index>(p.size(), k);
  options.k0 = k;
  options.seed = seed;
  return fit(data, options);
}

}  // namespace fama::testing
