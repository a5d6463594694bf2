#include "fama/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fama/error.hpp"
#include "fama/stats.hpp"

namespace fama::preprocess {

namespace {

double quantile_score(const std::vector<double>& sorted, double x) {
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
  const auto hi = std::upper_bound(lo, sorted.end(), x);
  const double less = static_cast<double>(lo - sorted.begin());
  const double equal = static_cast<double>(hi - lo);
  const double u = (less + 0.5 * (equal + 1.0)) / (static_cast<double>(sorted.size()) + 1.0);
  return stats::normal_quantile(u);
}

void moments(const Vector& v, double& mean, double& sd) {
  mean = v.mean();
  sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

std::vector<double> sorted_values(const Vector& column) {
  std::vector<double> sorted(column.data(), column.data() + column.size());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

void require_spread(const Vector& column, Index j) {
  if (column.size() < 2) throw Error(Errc::DimensionMismatch, "a column needs at least two values");
  if (column.maxCoeff() == column.minCoeff()) {
    throw Error(Errc::ConstantColumn, "column " + std::to_string(j) + " is constant");
  }
}

}  // namespace

Vector rank_normal_scores(const Vector& column) {
  require_spread(column, 0);
  const auto sorted = sorted_values(column);
  Vector out(column.size());
  for (Index i = 0; i < column.size(); ++i) out[i] = quantile_score(sorted, column[i]);
  return out;
}

Vector rank_normal_transform(const Vector& column) {
  const Vector scores = rank_normal_scores(column);
  double mean, sd;
  moments(scores, mean, sd);
  return ((scores.array() - mean) / sd).matrix();
}

PreprocessSpec fit_spec(const Matrix& Y, PreprocessMode mode) {
  PreprocessSpec spec;
  spec.mode = mode;
  if (mode == PreprocessMode::None) return spec;
  spec.columns.resize(static_cast<std::size_t>(Y.cols()));
  for (Index j = 0; j < Y.cols(); ++j) {
    const Vector column = Y.col(j);
    require_spread(column, j);
    ColumnTransform& t = spec.columns[static_cast<std::size_t>(j)];
    if (mode == PreprocessMode::RankNormal) {
      t.reference = sorted_values(column);
      Vector scores(column.size());
      for (Index i = 0; i < column.size(); ++i) scores[i] = quantile_score(t.reference, column[i]);
      moments(scores, t.mean, t.sd);
    } else {
      moments(column, t.mean, t.sd);
    }
  }
  return spec;
}

Matrix apply_spec(const PreprocessSpec& spec, const Matrix& Y) {
  if (spec.mode == PreprocessMode::None) return Y;
  if (static_cast<Index>(spec.columns.size()) != Y.cols()) {
    throw Error(Errc::DimensionMismatch, "preprocessing spec has " + std::to_string(spec.columns.size()) +
                                             " columns, data has " + std::to_string(Y.cols()));
  }
  Matrix out(Y.rows(), Y.cols());
  for (Index j = 0; j < Y.cols(); ++j) {
    const ColumnTransform& t = spec.columns[static_cast<std::size_t>(j)];
    for (Index i = 0; i < Y.rows(); ++i) {
      const double x = spec.mode == PreprocessMode::RankNormal ? quantile_score(t.reference, Y(i, j)) : Y(i, j);
      out(i, j) = (x - t.mean) / t.sd;
    }
  }
  return out;
}

Matrix fit_transform(const Matrix& Y, PreprocessMode mode, PreprocessSpec* spec_out) {
  PreprocessSpec spec = fit_spec(Y, mode);
  Matrix out = apply_spec(spec, Y);
  if (spec_out) *spec_out = std::move(spec);
  return out;
}

std::string_view mode_name(PreprocessMode mode) {
  switch (mode) {
    case PreprocessMode::None: return "none";
    case PreprocessMode::Standardize: return "standardize";
    case PreprocessMode::RankNormal: return "rank-normal";
  }
  return "none";
}

PreprocessMode parse_mode(std::string_view name) {
  if (name == "none") return PreprocessMode::None;
  if (name == "standardize") return PreprocessMode::Standardize;
  if (name == "rank-normal") return PreprocessMode::RankNormal;
  throw Error(Errc::InvalidArgument, "unknown preprocessing mode '" + std::string(name) + "'");
}

}  // namespace fama::preprocess
