#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fama/covariance.hpp"
#include "fama/intervals.hpp"
#include "fama/posterior.hpp"
#include "fama/simulate.hpp"
#include "fama/types.hpp"

namespace fama::io {

inline constexpr const char* kFitSchema = "fama-fit-v1";
inline constexpr const char* kSimSchema = "fama-sim-v1";

struct CsvOptions {
  char delimiter = ',';
  bool header = true;  // first line holds column names
};

/// Numeric matrix from a delimited text file. Throws ParseError naming
/// file, line and column of the first bad cell; IoError if unreadable.
Matrix load_matrix(const std::filesystem::path& path, const CsvOptions& options = {},
                   std::vector<std::string>* column_names = nullptr);

/// One view per file, named by file stem, rows aligned by position.
/// Throws RowCountMismatch when files disagree on the number of rows.
MultiViewDataset load_views(const std::vector<std::filesystem::path>& paths, const CsvOptions& options = {});

/// Writes every value with 17 significant digits (exact round trip).
void save_matrix(const std::filesystem::path& path, const Matrix& Y, const CsvOptions& options = {});

/// Writes <dir>/<view_name>.csv for every view.
void save_views(const std::filesystem::path& dir, const MultiViewDataset& dataset, const CsvOptions& options = {});

std::string format_double(double value);

// FitArtifact as JSON with a fixed field order; matrices as row-major
// nested arrays.
std::string artifact_to_json(const FitArtifact& fit);
FitArtifact artifact_from_json(const std::string& text);
void save_artifact(const std::filesystem::path& path, const FitArtifact& fit);
FitArtifact load_artifact(const std::filesystem::path& path);

/// Columns: m,m_prime,j,j_prime,center,lo,hi,se,method.
void write_intervals_csv(std::ostream& out, const intervals::IntervalMatrix& block);

/// Conditional means, one output row per input row.
void write_matrix_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header);

/// Correlation-scale block Σ̂_{mm'} / √(diag Σ̂_m diag Σ̂_m'ᵀ). With
/// `threshold`, entries whose BvM interval for the low-rank component
/// contains 0 are set to 0 (the intra-view diagonal stays 1).
Matrix correlation_block(const FitArtifact& fit, std::size_t m, std::size_t m_prime, bool threshold, double alpha,
                         const covariance::CovarianceOptions& options = {});

/// Flat little-endian binary stream of posterior draws:
///   "FAMASMP1", u64 draws, u64 p, u64 k0, then per draw
///   λ̃ (p × k0, row-major f64) followed by σ̃² (p f64).
void write_samples(const std::filesystem::path& path, const ViewPosterior& post, double rho, std::uint64_t draws,
                   std::uint64_t seed, std::uint64_t view_index);

struct SampleFile {
  std::uint64_t draws = 0, p = 0, k0 = 0;
  std::vector<posterior::PosteriorSample> samples;
};
SampleFile read_samples(const std::filesystem::path& path);

/// Simulation settings from an INI file, section [simulation]; lists are
/// comma separated. Unknown keys throw SchemaError.
sim::SimConfig load_sim_config(const std::filesystem::path& path);

/// Deterministic report (no wall times): CSV with one row per replicate per
/// metric, and a JSON document with config and aggregates.
void write_sim_csv(std::ostream& out, const sim::SimReport& report);
std::string sim_report_json(const sim::SimReport& report);
/// Wall times kept apart from the deterministic outputs.
void write_timing_csv(std::ostream& out, const sim::SimReport& report);

/// Dataset views named in an INI file:
///   [view.<name>] path = ..., k = ... (optional)
struct ViewConfig {
  std::string name;
  std::filesystem::path path;
  std::optional<Index> k;
};
std::vector<ViewConfig> load_view_config(const std::filesystem::path& path);

}  // namespace fama::io
