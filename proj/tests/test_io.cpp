#include <gtest/gtest.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fama/covariance.hpp"
#include "fama/error.hpp"
#include "fama/io.hpp"
#include "support.hpp"

using namespace fama;
using fama::testing::gaussian_matrix;
using fama::testing::small_fit;

namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("fama-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

Errc code_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::InvalidArgument;
}

}  // namespace

TEST(LoadViews, TwoSmallFiles) {
  TempDir dir;
  write_text(dir / "rna.csv", "a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n");
  write_text(dir / "atac.csv", "x\n1\n2\n3\n4\n+5e0\n");
  const auto data = io::load_views({dir / "rna.csv", dir / "atac.csv"});
  EXPECT_EQ(data.n(), 5);
  EXPECT_EQ(data.view_names, (std::vector<std::string>{"rna", "atac"}));
  EXPECT_EQ(data.views[1](4, 0), 5.0);
}

TEST(LoadViews, ParseErrorNamesLocation) {
  TempDir dir;
  write_text(dir / "bad.csv", "a,b\n1,2\n3,NA\n");
  try {
    io::load_matrix(dir / "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_NE(std::string(e.what()).find("bad.csv:3:2"), std::string::npos) << e.what();
  }
}

TEST(LoadViews, RowCountMismatchAndEmpty) {
  TempDir dir;
  write_text(dir / "a.csv", "1\n2\n");
  write_text(dir / "b.csv", "1\n2\n3\n");
  write_text(dir / "e.csv", "x\n");
  io::CsvOptions raw;
  raw.header = false;
  EXPECT_EQ(code_of([&] { io::load_views({dir / "a.csv", dir / "b.csv"}, raw); }), Errc::RowCountMismatch);
  EXPECT_EQ(code_of([&] { io::load_matrix(dir / "e.csv"); }), Errc::EmptyView);
  EXPECT_EQ(code_of([&] { io::load_matrix(dir / "missing.csv"); }), Errc::IoError);
}

TEST(LoadViews, RoundTripIsExact) {
  TempDir dir;
  MultiViewDataset data;
  data.views = {gaussian_matrix(7, 3, 1, 1e6), gaussian_matrix(7, 2, 2, 1e-9)};
  data.views[0](0, 0) = std::nextafter(1.0, 2.0);
  data.view_names = {"first", "second"};
  io::save_views(dir.path(), data);
  const auto back = io::load_views({dir / "first.csv", dir / "second.csv"});
  EXPECT_TRUE(back.views[0] == data.views[0]);
  EXPECT_TRUE(back.views[1] == data.views[1]);
  EXPECT_EQ(back.view_names, data.view_names);
}

TEST(LoadViews, TabDelimiter) {
  TempDir dir;
  write_text(dir / "t.tsv", "1\t2\n3\t4\n");
  io::CsvOptions opts{'\t', false};
  const Matrix Y = io::load_matrix(dir / "t.tsv", opts);
  EXPECT_EQ(Y(1, 1), 4.0);
}

TEST(Artifact, JsonRoundTripIsExact) {
  const auto fit = small_fit(3);
  const std::string text = io::artifact_to_json(fit);
  const auto back = io::artifact_from_json(text);
  EXPECT_EQ(io::artifact_to_json(back), text);
  EXPECT_EQ(back.ranks.k0, fit.ranks.k0);
  EXPECT_EQ(back.ranks.k_per_view, fit.ranks.k_per_view);
  EXPECT_EQ(back.seed, fit.seed);
  EXPECT_TRUE(back.factor_estimate.F_hat == fit.factor_estimate.F_hat);
  for (std::size_t m = 0; m < fit.view_count(); ++m) {
    EXPECT_TRUE(back.factor_estimate.bases[m] == fit.factor_estimate.bases[m]);
    EXPECT_TRUE(back.posteriors[m].lambda_hat == fit.posteriors[m].lambda_hat);
    EXPECT_TRUE(back.posteriors[m].delta_sq == fit.posteriors[m].delta_sq);
    EXPECT_EQ(back.posteriors[m].rho, fit.posteriors[m].rho);
    EXPECT_EQ(back.posteriors[m].tau_sq, fit.posteriors[m].tau_sq);
    EXPECT_EQ(back.preprocessing[m].columns.size(), fit.preprocessing[m].columns.size());
  }
}

TEST(Artifact, EstimatedRanksKeepJicTrace) {
  const auto data = fama::testing::factor_dataset(100, {20, 25}, 2, 1.0, 4);
  FitOptions opts;
  opts.preprocess = PreprocessMode::RankNormal;
  const auto fit = fama::fit(data, opts);
  const auto back = io::artifact_from_json(io::artifact_to_json(fit));
  ASSERT_EQ(back.diagnostics.jic.size(), 2u);
  EXPECT_EQ(back.diagnostics.jic[1].per_k_jic, fit.diagnostics.jic[1].per_k_jic);
  EXPECT_EQ(back.preprocessing[0].columns[3].reference, fit.preprocessing[0].columns[3].reference);
}

TEST(Artifact, SchemaErrors) {
  EXPECT_EQ(code_of([] { io::artifact_from_json("{\"schema\": \"other\"}"); }), Errc::SchemaError);
  EXPECT_EQ(code_of([] { io::artifact_from_json("not json"); }), Errc::SchemaError);
  auto fit = small_fit(5);
  std::string text = io::artifact_to_json(fit);
  const auto pos = text.find("\"n\": ");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 5, "\"n\": 1");  // n = 1<digits>: breaks the F_hat row count
  EXPECT_EQ(code_of([&] { io::artifact_from_json(text); }), Errc::SchemaError);
}

TEST(Artifact, FileRoundTrip) {
  TempDir dir;
  const auto fit = small_fit(6);
  io::save_artifact(dir / "fit.json", fit);
  EXPECT_EQ(io::artifact_to_json(io::load_artifact(dir / "fit.json")), io::artifact_to_json(fit));
}

TEST(Exports, IntervalCsvColumns) {
  const auto fit = small_fit(7);
  const auto block = intervals::interval_matrix(fit, 0, 1, 0.05, intervals::Method::Bvm, {0, 1}, {2});
  std::ostringstream out;
  io::write_intervals_csv(out, block);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "m,m_prime,j,j_prime,center,lo,hi,se,method");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.substr(0, 4), "0,1,");
    EXPECT_EQ(line.substr(line.size() - 3), "bvm");
  }
  EXPECT_EQ(rows, 2);
}

TEST(Exports, CorrelationBlock) {
  const auto fit = small_fit(8);
  const Matrix plain = io::correlation_block(fit, 0, 0, false, 0.05);
  for (Index j = 0; j < plain.rows(); ++j) EXPECT_EQ(plain(j, j), 1.0);
  const auto blocks = covariance::point_estimates(fit);
  const Matrix S = blocks.intra(0);
  EXPECT_NEAR(plain(0, 1), S(0, 1) / std::sqrt(S(0, 0) * S(1, 1)), 1e-14);

  const Matrix thresholded = io::correlation_block(fit, 0, 1, true, 0.05);
  const Matrix raw = io::correlation_block(fit, 0, 1, false, 0.05);
  const auto bvm = intervals::interval_matrix(fit, 0, 1, 0.05, intervals::Method::Bvm);
  for (Index j = 0; j < raw.rows(); ++j) {
    for (Index jp = 0; jp < raw.cols(); ++jp) {
      const auto& r = bvm.at(static_cast<std::size_t>(j), static_cast<std::size_t>(jp));
      const bool straddles = r.lo() <= 0.0 && r.hi() >= 0.0;
      EXPECT_EQ(thresholded(j, jp), straddles ? 0.0 : raw(j, jp));
    }
  }
}

TEST(Exports, CorrelationZeroesStraddlingEntry) {
  // Two variables per view; the cross loading of variable 1 is tiny, so its
  // interval must straddle 0 while variable 0 is clearly nonzero.
  FitArtifact fit;
  fit.n = 100;
  for (int m = 0; m < 2; ++m) {
    ViewPosterior post;
    post.lambda_hat = Matrix(2, 1);
    post.lambda_hat << 2.0, 0.01;
    post.delta_sq = Vector::Ones(2);
    post.nu_n = 101.0;
    fit.posteriors.push_back(post);
  }
  const Matrix c = io::correlation_block(fit, 0, 1, true, 0.05);
  EXPECT_NE(c(0, 0), 0.0);
  EXPECT_EQ(c(1, 1), 0.0);
  EXPECT_EQ(c(0, 1), 0.0);
}

TEST(Samples, BinaryRoundTrip) {
  TempDir dir;
  const auto fit = small_fit(9);
  io::write_samples(dir / "s.bin", fit.posteriors[1], fit.posteriors[1].rho, 4, 17, 1);
  const auto file = io::read_samples(dir / "s.bin");
  EXPECT_EQ(file.draws, 4u);
  EXPECT_EQ(file.p, static_cast<std::uint64_t>(fit.posteriors[1].p()));
  const auto expected = posterior::sample_posterior(fit.posteriors[1], fit.posteriors[1].rho, 4, 17, 1);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_TRUE(file.samples[t].lambda_tilde == expected[t].lambda_tilde);
    EXPECT_TRUE(file.samples[t].sigma_tilde_sq == expected[t].sigma_tilde_sq);
  }
}

TEST(SimConfigFile, ParsesAndBroadcasts) {
  TempDir dir;
  write_text(dir / "sim.ini",
             "[simulation]\nn = 120\np = 30, 40\nk = 2\nk0 = 3\npsi = 0.7\nreps = 3\nseed = 9\n"
             "rank_mode = oracle\n");
  const auto config = io::load_sim_config(dir / "sim.ini");
  EXPECT_EQ(config.n, 120);
  EXPECT_EQ(config.p, (std::vector<Index>{30, 40}));
  EXPECT_EQ(config.k, (std::vector<Index>{2, 2}));
  EXPECT_EQ(config.psi, (std::vector<double>{0.7, 0.7}));
  EXPECT_EQ(config.rank_mode, sim::RankMode::Oracle);
  write_text(dir / "bad.ini", "[simulation]\nbogus = 1\n");
  EXPECT_EQ(code_of([&] { io::load_sim_config(dir / "bad.ini"); }), Errc::SchemaError);
}

TEST(ViewConfigFile, ResolvesRelativePaths) {
  TempDir dir;
  write_text(dir / "views.ini", "[view.rna]\npath = rna.csv\nk = 4\n[view.atac]\npath = /abs/atac.csv\n");
  const auto views = io::load_view_config(dir / "views.ini");
  ASSERT_EQ(views.size(), 2u);
  EXPECT_EQ(views[0].name, "rna");
  EXPECT_EQ(views[0].path, dir / "rna.csv");
  EXPECT_EQ(views[0].k, 4);
  EXPECT_EQ(views[1].path, fs::path("/abs/atac.csv"));
  EXPECT_FALSE(views[1].k.has_value());
}
