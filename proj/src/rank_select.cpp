#include "fama/rank_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fama/error.hpp"

namespace fama::rank {

namespace {

// Incremental evaluator over k = 1, 2, ...: keeps ‖P_k y_j‖² per column so
// each step costs O(p).
class LoglikScan {
 public:
  LoglikScan(const Matrix& Y, const spectral::TruncatedSvd& svd, const TauRule& rule)
      : svd_(svd), rule_(rule), n_(Y.rows()), colsq_(Y.colwise().squaredNorm().transpose()),
        projected_(Vector::Zero(Y.cols())) {
    total_ = colsq_.sum();
  }

  LoglikEval advance() {
    const Index l = k_++;
    const double s2 = svd_.s[l] * svd_.s[l];
    captured_ += s2;
    projected_.array() += s2 * svd_.Vt.row(l).transpose().array().square();
    return evaluate();
  }

  Index rank() const { return k_; }

 private:
  LoglikEval evaluate() const {
    const double n = static_cast<double>(n_);
    double tau_inv_sq;
    if (rule_.fixed_tau_sq) {
      tau_inv_sq = 1.0 / *rule_.fixed_tau_sq;
    } else {
      const double signal = captured_ / n;
      const double residual = std::max(total_ - captured_, 0.0) / n;
      if (residual < kVarianceFloor) {
        tau_inv_sq = 0.0;  // perfect fit: the adaptive prior is flat
      } else if (signal <= 0.0) {
        tau_inv_sq = std::numeric_limits<double>::infinity();
      } else {
        tau_inv_sq = static_cast<double>(k_) * residual / signal;
      }
    }
    const double shrink = n / (n + tau_inv_sq);
    const double gap = (1.0 - shrink) * (1.0 - shrink);

    LoglikEval out;
    const double log_two_pi = std::log(2.0 * std::numbers::pi);
    for (Index j = 0; j < colsq_.size(); ++j) {
      const double r = std::max(colsq_[j] - projected_[j], 0.0) + gap * projected_[j];
      double var = r / n;
      if (var < kVarianceFloor) {
        var = kVarianceFloor;
        ++out.floored_columns;
      }
      out.loglik += -0.5 * n * (log_two_pi + std::log(var)) - r / (2.0 * var);
    }
    return out;
  }

  const spectral::TruncatedSvd& svd_;
  TauRule rule_;
  Index n_;
  Vector colsq_;
  Vector projected_;
  double total_ = 0.0;
  double captured_ = 0.0;
  Index k_ = 0;
};

}  // namespace

double jic_penalty(Index k, Index n, Index p) {
  return static_cast<double>(k) * static_cast<double>(std::max(n, p)) *
         std::log(static_cast<double>(std::min(n, p)));
}

LoglikEval approx_loglik(const Matrix& Y, Index k, const TauRule& tau_rule, const spectral::SvdOptions& svd) {
  const auto decomposition = spectral::truncated_svd(Y, k, svd);
  LoglikScan scan(Y, decomposition, tau_rule);
  LoglikEval eval;
  while (scan.rank() < k) eval = scan.advance();
  return eval;
}

ViewRankResult select_view_rank(const Matrix& Y, Index k_max, const TauRule& tau_rule,
                                const spectral::SvdOptions& svd) {
  const Index limit = std::min(Y.rows(), Y.cols());
  if (k_max < 1 || k_max > limit) {
    throw Error(Errc::RankTooLarge, "k_max = " + std::to_string(k_max) + " outside [1, " +
                                        std::to_string(limit) + "]");
  }
  const auto decomposition = spectral::truncated_svd(Y, k_max, svd);
  LoglikScan scan(Y, decomposition, tau_rule);

  ViewRankResult result;
  result.trace.n = Y.rows();
  result.trace.p = Y.cols();
  double best = std::numeric_limits<double>::infinity();
  for (Index k = 1; k <= k_max; ++k) {
    const LoglikEval eval = scan.advance();
    const double jic = -2.0 * eval.loglik + jic_penalty(k, Y.rows(), Y.cols());
    result.trace.per_k_loglik.push_back(eval.loglik);
    result.trace.per_k_jic.push_back(jic);
    result.floored_columns += eval.floored_columns;
    if (jic < best) {
      best = jic;
      result.k = k;
    }
  }
  result.trace.chosen_k = result.k;
  return result;
}

Index default_k_max(const Matrix& Y) {
  const Index limit = std::min(Y.rows(), Y.cols());
  Eigen::BDCSVD<Matrix> svd(Y);
  const Vector s2 = svd.singularValues().array().square();
  const double total = s2.sum();
  if (!(total > 0.0)) throw Error(Errc::ZeroMatrix, "cannot choose k_max for a zero matrix");
  Index k = limit;
  double cumulative = 0.0;
  for (Index l = 0; l < s2.size(); ++l) {
    cumulative += s2[l];
    if (cumulative / total >= 0.9 - 1e-12) {
      k = l + 1;
      break;
    }
  }
  return std::max<Index>(1, std::min(k, limit - 1));
}

GlobalRankResult select_global_rank(std::span<const double> singvals, std::span<const Index> k_view_hats,
                                    Index view_count, Index k0_max, std::optional<double> tau1) {
  if (k_view_hats.empty() || view_count < 1) throw Error(Errc::InvalidArgument, "no view ranks supplied");
  const Index lower = *std::min_element(k_view_hats.begin(), k_view_hats.end());
  if (lower > k0_max) {
    throw Error(Errc::InvalidRange, "lower bound " + std::to_string(lower) + " exceeds k0_max " +
                                        std::to_string(k0_max));
  }
  if (k0_max + 1 > static_cast<Index>(singvals.size())) {
    throw Error(Errc::InvalidRange, "k0_max needs s_{k0_max+1}; only " + std::to_string(singvals.size()) +
                                        " singular values given");
  }
  const double M = static_cast<double>(view_count);
  const double threshold = 1.0 / M - tau1.value_or(1.0 / (2.0 * M));

  GlobalRankResult out;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (Index j = lower; j <= k0_max; ++j) {
    const double next = singvals[static_cast<std::size_t>(j)];  // s_{j+1}
    if (!(next < threshold)) continue;
    const double gap = singvals[static_cast<std::size_t>(j - 1)] - next;
    if (gap > best_gap) {
      best_gap = gap;
      out.k0 = j;
    }
  }
  if (out.k0 == 0) {
    out.k0 = k0_max;
    out.constraint_unsatisfied = true;
  }
  return out;
}

}  // namespace fama::rank
