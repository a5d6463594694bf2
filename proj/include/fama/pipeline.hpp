#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "fama/posterior.hpp"
#include "fama/spectral.hpp"
#include "fama/types.hpp"

namespace fama {

struct FitOptions {
  PreprocessMode preprocess = PreprocessMode::None;
  /// Per-view ranks; when set the JIC scan is skipped and no trace is kept.
  std::optional<std::vector<Index>> k_per_view;
  std::optional<Index> k0;
  /// Upper end of the per-view JIC scan; default: 90% variance rule.
  std::optional<Index> k_max;
  /// Upper end of the global-rank search; default: min(Σ k̂_m, n − 1).
  std::optional<Index> k0_max;
  std::optional<double> tau1;
  posterior::NigPrior prior;
  bool exact_term_count = false;
  Index subsample_above = 20000;
  std::uint64_t seed = 0;
  spectral::SvdOptions svd;
  /// Called after each stage with its wall time in seconds.
  std::function<void(std::string_view stage, double seconds)> on_stage;
};

/// Preprocess → ranks → aligned factors → τ → NIG posteriors → ρ.
/// Errors are rethrown with the failing stage prefixed to the message.
FitArtifact fit(const MultiViewDataset& dataset, const FitOptions& options = {});

/// The fitted (preprocessed) matrices a FitArtifact was estimated from.
std::vector<Matrix> preprocessed_views(const MultiViewDataset& dataset, const FitArtifact& fit);

}  // namespace fama
