// Command-line front end: fit, simulate, intervals, predict, loglik, export-corr.
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "fama/covariance.hpp"
#include "fama/error.hpp"
#include "fama/intervals.hpp"
#include "fama/io.hpp"
#include "fama/parallel.hpp"
#include "fama/pipeline.hpp"
#include "fama/preprocess.hpp"
#include "fama/simulate.hpp"

namespace fs = std::filesystem;
using namespace fama;

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kNumeric = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to `path`, or stdout when the path is empty or "-".
template <typename F>
void with_output(const std::string& path, F&& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::out | std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  body(out);
  if (!out) throw Error(Errc::IoError, "failed writing " + path);
}

io::CsvOptions csv_options(const std::string& delimiter, bool no_header) {
  if (delimiter.size() != 1 && delimiter != "\\t") throw UsageError("delimiter must be a single character");
  return {delimiter == "\\t" ? '\t' : delimiter.front(), !no_header};
}

covariance::CovarianceOptions residual_options(const std::string& name) {
  if (name == "posterior-mean") return {covariance::ResidualPlugIn::PosteriorMean};
  if (name == "delta") return {covariance::ResidualPlugIn::Delta};
  throw UsageError("--residual must be posterior-mean or delta");
}

std::size_t check_view_index(const FitArtifact& fit, std::size_t m, const char* flag) {
  if (m >= fit.view_count()) {
    throw UsageError(std::string(flag) + " = " + std::to_string(m) + " but the fit has " +
                     std::to_string(fit.view_count()) + " views");
  }
  return m;
}

struct FitArgs {
  std::vector<std::string> views;
  std::string views_config;
  std::string delimiter = ",";
  bool no_header = false;
  std::string preprocess = "standardize";
  std::vector<Index> km;
  std::optional<Index> k0, kmax, k0_max;
  double nu0 = 1.0, sigma0_sq = 1.0;
  bool exact_term_count = false;
  std::uint64_t seed = 0;
  std::string out;
  std::uint64_t samples = 0;
  std::string samples_dir;
};

void run_fit(const FitArgs& a) {
  std::vector<fs::path> paths(a.views.begin(), a.views.end());
  std::vector<Index> km = a.km;
  std::vector<std::string> names;
  if (!a.views_config.empty()) {
    if (!paths.empty()) throw UsageError("use either --view or --views-config");
    const auto config = io::load_view_config(a.views_config);
    bool any_k = false;
    for (const auto& v : config) any_k = any_k || v.k.has_value();
    for (const auto& v : config) {
      paths.push_back(v.path);
      names.push_back(v.name);
      if (any_k) {
        if (!v.k) throw Error(Errc::SchemaError, "either every view or no view sets k");
        km.push_back(*v.k);
      }
    }
  }
  if (paths.empty()) throw UsageError("at least one --view is required");

  MultiViewDataset data = io::load_views(paths, csv_options(a.delimiter, a.no_header));
  if (!names.empty()) data.view_names = names;

  FitOptions options;
  options.preprocess = preprocess::parse_mode(a.preprocess);
  if (!km.empty()) options.k_per_view = km;
  options.k0 = a.k0;
  options.k_max = a.kmax;
  options.k0_max = a.k0_max;
  options.prior = {a.nu0, a.sigma0_sq};
  options.exact_term_count = a.exact_term_count;
  options.seed = a.seed;
  options.on_stage = [](std::string_view stage, double seconds) {
    spdlog::info("stage {:<12} {:.3f} s", stage, seconds);
  };
  const FitArtifact fit = ::fama::fit(data, options);
  for (const auto& w : fit.diagnostics.warnings) spdlog::warn("{}", w);
  io::save_artifact(a.out, fit);
  spdlog::info("k0 = {}, wrote {}", fit.ranks.k0, a.out);

  if (a.samples > 0) {
    if (a.samples_dir.empty()) throw UsageError("--samples needs --samples-dir");
    fs::create_directories(a.samples_dir);
    for (std::size_t m = 0; m < fit.view_count(); ++m) {
      const fs::path path = fs::path(a.samples_dir) / (fit.view_names[m] + ".bin");
      io::write_samples(path, fit.posteriors[m], fit.posteriors[m].rho, a.samples, a.seed, m);
    }
  }
}

struct IntervalArgs {
  std::string fit;
  std::size_t m = 0, m_prime = 0;
  double alpha = 0.05;
  std::string method = "bvm";
  std::vector<Index> rows, cols;
  bool unit_rho = false;
  std::string out;
};

void run_intervals(const IntervalArgs& a) {
  const FitArtifact fit = io::load_artifact(a.fit);
  check_view_index(fit, a.m, "--m");
  check_view_index(fit, a.m_prime, "--m-prime");
  const auto block =
      intervals::interval_matrix(fit, a.m, a.m_prime, a.alpha, intervals::parse_method(a.method), a.rows, a.cols,
                                 a.unit_rho);
  with_output(a.out, [&](std::ostream& out) { io::write_intervals_csv(out, block); });
}

struct PredictArgs {
  std::string fit;
  std::size_t given = 0, target = 1;
  std::string data;
  std::string delimiter = ",";
  bool no_header = false;
  std::string residual = "posterior-mean";
  std::string out;
};

void run_predict(const PredictArgs& a) {
  const FitArtifact fit = io::load_artifact(a.fit);
  check_view_index(fit, a.given, "--given");
  check_view_index(fit, a.target, "--target");
  const Matrix raw = io::load_matrix(a.data, csv_options(a.delimiter, a.no_header));
  const Matrix Y = preprocess::apply_spec(fit.preprocessing.at(a.given), raw);
  const auto blocks = covariance::point_estimates(fit, residual_options(a.residual));
  const Matrix means = covariance::conditional_means(blocks, a.given, Y, a.target);
  std::vector<std::string> header;
  for (Index j = 0; j < means.cols(); ++j) header.push_back(fit.view_names[a.target] + "_" + std::to_string(j));
  with_output(a.out, [&](std::ostream& out) { io::write_matrix_csv(out, means, header); });
}

struct LoglikArgs {
  std::string fit;
  std::vector<std::size_t> views;
  std::vector<std::string> test;
  std::vector<std::string> means;
  std::string delimiter = ",";
  bool no_header = false;
  std::string residual = "posterior-mean";
  std::string compare;
  std::string rows_out;
};

Vector per_row_loglik(const FitArtifact& fit, const LoglikArgs& a, const std::vector<std::size_t>& subset,
                      const std::vector<Matrix>& raw, const std::vector<Vector>& means) {
  std::vector<Matrix> Y;
  for (std::size_t s = 0; s < subset.size(); ++s) {
    Y.push_back(preprocess::apply_spec(fit.preprocessing.at(check_view_index(fit, subset[s], "--views")), raw[s]));
  }
  const auto blocks = covariance::point_estimates(fit, residual_options(a.residual));
  return covariance::gaussian_loglik_rows(blocks, subset, Y, means);
}

void run_loglik(const LoglikArgs& a) {
  const FitArtifact fit = io::load_artifact(a.fit);
  std::vector<std::size_t> subset = a.views;
  if (subset.empty()) {
    for (std::size_t m = 0; m < fit.view_count(); ++m) subset.push_back(m);
  }
  if (a.test.size() != subset.size()) throw UsageError("give one --test file per selected view");
  if (!a.means.empty() && a.means.size() != subset.size()) throw UsageError("give one --means file per selected view");
  const auto csv = csv_options(a.delimiter, a.no_header);
  std::vector<Matrix> raw;
  for (const auto& path : a.test) raw.push_back(io::load_matrix(path, csv));
  std::vector<Vector> means;
  for (const auto& path : a.means) {
    const Matrix row = io::load_matrix(path, csv);
    if (row.rows() != 1) throw Error(Errc::DimensionMismatch, path + " must hold a single row of means");
    means.emplace_back(row.row(0).transpose());
  }

  const Vector rows = per_row_loglik(fit, a, subset, raw, means);
  std::cout << "loglik," << io::format_double(rows.sum()) << "\n";
  std::cout << "n_test," << rows.size() << "\n";
  Matrix table(rows.size(), 1);
  table.col(0) = rows;
  if (!a.compare.empty()) {
    const FitArtifact other = io::load_artifact(a.compare);
    const Vector other_rows = per_row_loglik(other, a, subset, raw, means);
    const Vector diff = rows - other_rows;
    const auto test = covariance::paired_one_sided_t_test(std::span<const double>(diff.data(), diff.size()));
    std::cout << "compare_loglik," << io::format_double(other_rows.sum()) << "\n";
    std::cout << "t," << io::format_double(test.t) << "\n";
    std::cout << "df," << io::format_double(test.df) << "\n";
    std::cout << "p_value," << io::format_double(test.p_value) << "\n";
    table.conservativeResize(Eigen::NoChange, 2);
    table.col(1) = other_rows;
  }
  if (!a.rows_out.empty()) {
    std::vector<std::string> header{"loglik"};
    if (table.cols() == 2) header.push_back("compare_loglik");
    with_output(a.rows_out, [&](std::ostream& out) { io::write_matrix_csv(out, table, header); });
  }
}

struct CorrArgs {
  std::string fit;
  std::size_t m = 0, m_prime = 0;
  bool threshold = false;
  double alpha = 0.05;
  std::string residual = "posterior-mean";
  std::string out;
};

void run_export_corr(const CorrArgs& a) {
  const FitArtifact fit = io::load_artifact(a.fit);
  check_view_index(fit, a.m, "--m");
  check_view_index(fit, a.m_prime, "--m-prime");
  const Matrix C = io::correlation_block(fit, a.m, a.m_prime, a.threshold, a.alpha, residual_options(a.residual));
  std::vector<std::string> header;
  for (Index j = 0; j < C.cols(); ++j) header.push_back(fit.view_names[a.m_prime] + "_" + std::to_string(j));
  with_output(a.out, [&](std::ostream& out) { io::write_matrix_csv(out, C, header); });
}

struct SimArgs {
  std::string config;
  std::optional<Index> n, k0, submatrix_size;
  std::vector<Index> p, k;
  std::vector<double> psi;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::string rank_mode;
  bool baseline = false;
  bool noiseless = false;
  std::string out_csv, out_json, timing;
};

void run_simulate(const SimArgs& a) {
  sim::SimConfig c = a.config.empty() ? sim::SimConfig{} : io::load_sim_config(a.config);
  if (a.n) c.n = *a.n;
  if (!a.p.empty()) c.p = a.p;
  const std::size_t M = c.p.size();
  if (!a.k.empty()) c.k = a.k.size() == 1 ? std::vector<Index>(M, a.k.front()) : a.k;
  if (!a.psi.empty()) c.psi = a.psi.size() == 1 ? std::vector<double>(M, a.psi.front()) : a.psi;
  if (a.k0) c.k0 = *a.k0;
  if (a.reps) c.reps = *a.reps;
  if (a.seed) c.seed = *a.seed;
  if (a.alpha) c.alpha = *a.alpha;
  if (a.submatrix_size) c.submatrix_size = *a.submatrix_size;
  if (a.rank_mode == "oracle") c.rank_mode = sim::RankMode::Oracle;
  else if (a.rank_mode == "estimate") c.rank_mode = sim::RankMode::Estimate;
  else if (!a.rank_mode.empty()) throw UsageError("--rank-mode must be oracle or estimate");
  c.baseline = c.baseline || a.baseline;
  c.noiseless = c.noiseless || a.noiseless;
  try {
    sim::validate(c);
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidArgument) throw UsageError(e.detail());
    throw;
  }

  const auto report = sim::run_experiment(c);
  std::size_t failed = 0;
  for (const auto& r : report.replicates) {
    if (!r.ok) {
      ++failed;
      spdlog::warn("replicate {} failed: {}", r.index, r.error);
    }
  }
  for (const auto& s : report.aggregates) {
    spdlog::info("{:<30} mean {:.4f} median {:.4f} ({} reps)", s.metric, s.mean, s.median, s.count);
  }
  if (!a.out_csv.empty()) with_output(a.out_csv, [&](std::ostream& out) { io::write_sim_csv(out, report); });
  with_output(a.out_json, [&](std::ostream& out) { out << io::sim_report_json(report); });
  if (!a.timing.empty()) with_output(a.timing, [&](std::ostream& out) { io::write_timing_csv(out, report); });
  if (failed == report.replicates.size() && failed > 0) throw Error(Errc::ConvergenceFailure, "every replicate failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view factor analysis via spectral alignment"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  std::string log_level = "info";
  app.add_option("--threads", threads, "Worker threads (default: FAMA_THREADS or all cores)");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model and write a JSON artifact");
  fit_cmd->add_option("--view", fa.views, "View matrix file (repeat per view; rows = samples)");
  fit_cmd->add_option("--views-config", fa.views_config, "INI file with [view.<name>] path=... k=...");
  fit_cmd->add_option("--delimiter", fa.delimiter, "Field delimiter")->capture_default_str();
  fit_cmd->add_flag("--no-header", fa.no_header, "Files have no header line");
  fit_cmd->add_option("--preprocess", fa.preprocess, "none, standardize or rank-normal")->capture_default_str();
  fit_cmd->add_option("--km", fa.km, "Per-view ranks (skips the JIC scan)");
  fit_cmd->add_option("--k0", fa.k0, "Global rank (skips the gap rule)");
  fit_cmd->add_option("--kmax", fa.kmax, "Upper end of the per-view rank scan");
  fit_cmd->add_option("--k0-max", fa.k0_max, "Upper end of the global rank search");
  fit_cmd->add_option("--nu0", fa.nu0, "Prior degrees of freedom")->capture_default_str();
  fit_cmd->add_option("--sigma0-sq", fa.sigma0_sq, "Prior residual scale")->capture_default_str();
  fit_cmd->add_flag("--exact-term-count", fa.exact_term_count, "Average b over p(p+1)/2 terms instead of C(p,2)");
  fit_cmd->add_option("--seed", fa.seed, "Seed")->capture_default_str();
  fit_cmd->add_option("--out", fa.out, "Artifact path")->required();
  fit_cmd->add_option("--samples", fa.samples, "Posterior draws per view to write");
  fit_cmd->add_option("--samples-dir", fa.samples_dir, "Directory for <view>.bin sample files");

  IntervalArgs ia;
  auto* iv_cmd = app.add_subcommand("intervals", "Entrywise intervals for a covariance block");
  iv_cmd->add_option("--fit", ia.fit, "Artifact path")->required();
  iv_cmd->add_option("--m", ia.m, "Row view")->capture_default_str();
  iv_cmd->add_option("--m-prime", ia.m_prime, "Column view")->capture_default_str();
  iv_cmd->add_option("--alpha", ia.alpha, "1 - level")->capture_default_str();
  iv_cmd->add_option("--method", ia.method, "clt or bvm")->capture_default_str();
  iv_cmd->add_option("--rows", ia.rows, "Row variables (default all)");
  iv_cmd->add_option("--cols", ia.cols, "Column variables (default all)");
  iv_cmd->add_flag("--unit-rho", ia.unit_rho, "BvM intervals without coverage correction");
  iv_cmd->add_option("--out", ia.out, "CSV path (default stdout)");

  PredictArgs pa;
  auto* pr_cmd = app.add_subcommand("predict", "Conditional means of one view given another");
  pr_cmd->add_option("--fit", pa.fit, "Artifact path")->required();
  pr_cmd->add_option("--given", pa.given, "Observed view")->capture_default_str();
  pr_cmd->add_option("--target", pa.target, "Predicted view")->capture_default_str();
  pr_cmd->add_option("--data", pa.data, "Rows of the observed view (raw scale)")->required();
  pr_cmd->add_option("--delimiter", pa.delimiter, "Field delimiter")->capture_default_str();
  pr_cmd->add_flag("--no-header", pa.no_header, "File has no header line");
  pr_cmd->add_option("--residual", pa.residual, "posterior-mean or delta")->capture_default_str();
  pr_cmd->add_option("--out", pa.out, "CSV path (default stdout)");

  LoglikArgs la;
  auto* ll_cmd = app.add_subcommand("loglik", "Held-out Gaussian log-likelihood");
  ll_cmd->add_option("--fit", la.fit, "Artifact path")->required();
  ll_cmd->add_option("--views", la.views, "View indices (default all)");
  ll_cmd->add_option("--test", la.test, "Test file per selected view (raw scale)")->required();
  ll_cmd->add_option("--means", la.means, "Single-row mean file per selected view (default zero mean)");
  ll_cmd->add_option("--delimiter", la.delimiter, "Field delimiter")->capture_default_str();
  ll_cmd->add_flag("--no-header", la.no_header, "Files have no header line");
  ll_cmd->add_option("--residual", la.residual, "posterior-mean or delta")->capture_default_str();
  ll_cmd->add_option("--compare", la.compare, "Second artifact: paired one-sided t-test of per-row differences");
  ll_cmd->add_option("--rows-out", la.rows_out, "Per-row log-likelihood CSV");

  CorrArgs ca;
  auto* co_cmd = app.add_subcommand("export-corr", "Correlation-scale covariance block");
  co_cmd->add_option("--fit", ca.fit, "Artifact path")->required();
  co_cmd->add_option("--m", ca.m, "Row view")->capture_default_str();
  co_cmd->add_option("--m-prime", ca.m_prime, "Column view")->capture_default_str();
  co_cmd->add_flag("--threshold", ca.threshold, "Zero entries whose BvM interval contains 0");
  co_cmd->add_option("--alpha", ca.alpha, "1 - level for thresholding")->capture_default_str();
  co_cmd->add_option("--residual", ca.residual, "posterior-mean or delta")->capture_default_str();
  co_cmd->add_option("--out", ca.out, "CSV path (default stdout)");

  SimArgs sa;
  auto* si_cmd = app.add_subcommand("simulate", "Replicated simulation study");
  si_cmd->add_option("--config", sa.config, "INI file with a [simulation] section");
  si_cmd->add_option("--n", sa.n, "Samples");
  si_cmd->add_option("--p", sa.p, "Variables per view");
  si_cmd->add_option("--k", sa.k, "Factors per view (one value applies to all)");
  si_cmd->add_option("--k0", sa.k0, "Global factors");
  si_cmd->add_option("--psi", sa.psi, "Loading scale per view (one value applies to all)");
  si_cmd->add_option("--reps", sa.reps, "Replicates");
  si_cmd->add_option("--seed", sa.seed, "Seed");
  si_cmd->add_option("--alpha", sa.alpha, "1 - interval level");
  si_cmd->add_option("--submatrix-size", sa.submatrix_size, "Coverage submatrix size");
  si_cmd->add_option("--rank-mode", sa.rank_mode, "estimate or oracle");
  si_cmd->add_flag("--baseline", sa.baseline, "Also score the concatenated-PCA baseline");
  si_cmd->add_flag("--noiseless", sa.noiseless, "Generate data without residual noise");
  si_cmd->add_option("--out-csv", sa.out_csv, "Per-replicate metrics CSV");
  si_cmd->add_option("--out-json", sa.out_json, "Report JSON (default stdout)");
  si_cmd->add_option("--timing", sa.timing, "Per-replicate wall times CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  auto logger = spdlog::stderr_color_mt("fama");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::from_str(log_level));
  if (threads > 0) set_thread_count(threads);

  try {
    if (*fit_cmd) run_fit(fa);
    else if (*iv_cmd) run_intervals(ia);
    else if (*pr_cmd) run_predict(pa);
    else if (*ll_cmd) run_loglik(la);
    else if (*co_cmd) run_export_corr(ca);
    else if (*si_cmd) run_simulate(sa);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (e.code() == Errc::InvalidArgument) return kUsage;
    return is_data_error(e.code()) ? kData : kNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kNumeric;
  }
  return 0;
}
