#pragma once

#include <string_view>

#include "fama/types.hpp"

namespace fama::preprocess {

/// Φ⁻¹ of the empirical CDF, evaluated as (average rank)/(n + 1) so the
/// extremes stay finite. Not standardized. Throws ConstantColumn.
Vector rank_normal_scores(const Vector& column);

/// rank_normal_scores followed by standardization to mean 0, sample variance 1.
Vector rank_normal_transform(const Vector& column);

/// Records the per-column statistics of `mode` on training data Y.
PreprocessSpec fit_spec(const Matrix& Y, PreprocessMode mode);

/// Applies a recorded transform to rows of the same variables. New values
/// are placed against the stored training order: a value x gets
/// u = (#{train < x} + (#{train = x} + 1)/2) / (n_train + 1).
Matrix apply_spec(const PreprocessSpec& spec, const Matrix& Y);

/// fit_spec then apply_spec, so replaying the spec on Y is bit-exact.
Matrix fit_transform(const Matrix& Y, PreprocessMode mode, PreprocessSpec* spec_out);

std::string_view mode_name(PreprocessMode mode);
PreprocessMode parse_mode(std::string_view name);

}  // namespace fama::preprocess
