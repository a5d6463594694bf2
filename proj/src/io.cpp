#include "fama/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fama/error.hpp"
#include "fama/preprocess.hpp"
#include "json.hpp"

namespace fama::io {

using Json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string location(const std::filesystem::path& path, std::size_t line, std::size_t col) {
  return path.string() + ":" + std::to_string(line) + ":" + std::to_string(col);
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  return out;
}

Json matrix_json(const Matrix& A) {
  Json rows = Json::array();
  for (Index i = 0; i < A.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::SchemaError, std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("field '") + key + "': " + e.what());
  }
}

Matrix matrix_from(const Json& j, const char* key) {
  const Json& rows = field(j, key);
  if (!rows.is_array()) throw Error(Errc::SchemaError, std::string("field '") + key + "' is not an array");
  const auto n = static_cast<Index>(rows.size());
  const Index k = n ? static_cast<Index>(rows.front().size()) : 0;
  Matrix A(n, k);
  for (Index i = 0; i < n; ++i) {
    const Json& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != k) {
      throw Error(Errc::SchemaError, std::string("field '") + key + "' is not rectangular");
    }
    for (Index c = 0; c < k; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw Error(Errc::SchemaError, std::string("field '") + key + "' holds a non-number");
      A(i, c) = v.get<double>();
    }
  }
  return A;
}

Vector vector_from(const Json& j, const char* key) {
  const auto values = get<std::vector<double>>(j, key);
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

PreprocessMode mode_from(const std::string& name) {
  try {
    return preprocess::parse_mode(name);
  } catch (const Error&) {
    throw Error(Errc::SchemaError, "unknown preprocessing mode '" + name + "'");
  }
}

void put_le(std::ostream& out, std::uint64_t bits) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

std::uint64_t get_le(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw Error(Errc::IoError, "sample file is truncated");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[static_cast<std::size_t>(i)];
  return bits;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
  std::vector<T> out;
  for (const auto part : split(text, ',')) {
    if (part.empty()) continue;
    T value{};
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw Error(Errc::SchemaError, "key '" + key + "': cannot parse '" + std::string(part) + "'");
    }
    out.push_back(value);
  }
  return out;
}

template <typename T>
T parse_one(const std::string& text, const std::string& key) {
  const auto values = parse_list<T>(text, key);
  if (values.size() != 1) throw Error(Errc::SchemaError, "key '" + key + "' expects one value");
  return values.front();
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(Errc::SchemaError, "key '" + key + "' expects true or false");
}

template <typename T>
Json list_json(const std::vector<T>& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(x);
  return out;
}

Json block_errors_json(const sim::BlockErrors& e) {
  Json out;
  out["overall"] = e.overall;
  out["intra"] = list_json(e.intra);
  out["inter"] = list_json(e.inter);
  return out;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return buf.data();
}

Matrix load_matrix(const std::filesystem::path& path, const CsvOptions& options,
                   std::vector<std::string>* column_names) {
  auto in = open_in(path);
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  Index cols = -1;
  Index rows = 0;
  bool header_pending = options.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, options.delimiter);
    if (header_pending) {
      header_pending = false;
      cols = static_cast<Index>(fields.size());
      if (column_names) {
        column_names->clear();
        for (const auto f : fields) column_names->emplace_back(f);
      }
      continue;
    }
    if (cols < 0) cols = static_cast<Index>(fields.size());
    if (static_cast<Index>(fields.size()) != cols) {
      throw Error(Errc::ParseError, location(path, line_no, fields.size()) + ": expected " + std::to_string(cols) +
                                        " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto f = fields[c];
      if (f.size() > 1 && f.front() == '+') f.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw Error(Errc::ParseError,
                    location(path, line_no, c + 1) + ": '" + std::string(f) + "' is not a finite number");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0 || cols <= 0) throw Error(Errc::EmptyView, path.string() + " holds no data rows");
  Matrix Y(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) Y(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  }
  return Y;
}

MultiViewDataset load_views(const std::vector<std::filesystem::path>& paths, const CsvOptions& options) {
  if (paths.empty()) throw Error(Errc::EmptyView, "no view files given");
  MultiViewDataset data;
  for (const auto& path : paths) {
    data.views.push_back(load_matrix(path, options));
    data.view_names.push_back(path.stem().string());
    if (data.views.back().rows() != data.views.front().rows()) {
      throw Error(Errc::RowCountMismatch, path.string() + " has " + std::to_string(data.views.back().rows()) +
                                              " rows, " + paths.front().string() + " has " +
                                              std::to_string(data.views.front().rows()));
    }
  }
  return data;
}

void save_matrix(const std::filesystem::path& path, const Matrix& Y, const CsvOptions& options) {
  if (options.delimiter != ',') throw Error(Errc::InvalidArgument, "only ',' is supported for writing");
  auto out = open_out(path);
  std::vector<std::string> header;
  if (options.header) {
    for (Index j = 0; j < Y.cols(); ++j) header.push_back("x" + std::to_string(j + 1));
  }
  write_matrix_csv(out, Y, header);
}

void save_views(const std::filesystem::path& dir, const MultiViewDataset& dataset, const CsvOptions& options) {
  std::filesystem::create_directories(dir);
  for (std::size_t m = 0; m < dataset.view_count(); ++m) {
    const std::string name = m < dataset.view_names.size() ? dataset.view_names[m] : "view" + std::to_string(m);
    save_matrix(dir / (name + ".csv"), dataset.views[m], options);
  }
}

std::string artifact_to_json(const FitArtifact& fit) {
  Json j;
  j["schema"] = kFitSchema;
  j["n"] = fit.n;
  j["seed"] = fit.seed;
  j["view_names"] = fit.view_names;
  j["ranks"] = {{"k0", fit.ranks.k0}, {"k_per_view", fit.ranks.k_per_view}};
  j["settings"] = {{"nu0", fit.settings.nu0},
                   {"sigma0_sq", fit.settings.sigma0_sq},
                   {"exact_term_count", fit.settings.exact_term_count}};
  Json prep = Json::array();
  for (const auto& spec : fit.preprocessing) {
    Json s;
    s["mode"] = preprocess::mode_name(spec.mode);
    Json cols = Json::array();
    for (const auto& c : spec.columns) {
      Json col;
      col["mean"] = c.mean;
      col["sd"] = c.sd;
      if (spec.mode == PreprocessMode::RankNormal) col["reference"] = c.reference;
      cols.push_back(std::move(col));
    }
    s["columns"] = std::move(cols);
    prep.push_back(std::move(s));
  }
  j["preprocessing"] = std::move(prep);
  Json fe;
  fe["F_hat"] = matrix_json(fit.factor_estimate.F_hat);
  fe["avg_projection_singvals"] = vector_json(fit.factor_estimate.avg_projection_singvals);
  Json bases = Json::array();
  for (const auto& U : fit.factor_estimate.bases) bases.push_back(matrix_json(U));
  fe["bases"] = std::move(bases);
  j["factor_estimate"] = std::move(fe);
  Json posts = Json::array();
  for (const auto& post : fit.posteriors) {
    Json p;
    p["lambda_hat"] = matrix_json(post.lambda_hat);
    p["K_scalar"] = post.K_scalar;
    p["nu_n"] = post.nu_n;
    p["delta_sq"] = vector_json(post.delta_sq);
    p["tau_sq"] = post.tau_sq;
    p["rho"] = post.rho;
    p["rho_max"] = post.rho_max;
    p["nu0"] = post.nu0;
    p["sigma0_sq"] = post.sigma0_sq;
    posts.push_back(std::move(p));
  }
  j["posteriors"] = std::move(posts);
  Json diag;
  Json jic = Json::array();
  for (const auto& t : fit.diagnostics.jic) {
    jic.push_back({{"per_k_loglik", t.per_k_loglik},
                   {"per_k_jic", t.per_k_jic},
                   {"chosen_k", t.chosen_k},
                   {"n", t.n},
                   {"p", t.p}});
  }
  diag["jic"] = std::move(jic);
  diag["warnings"] = fit.diagnostics.warnings;
  diag["k0_constraint_unsatisfied"] = fit.diagnostics.k0_constraint_unsatisfied;
  j["diagnostics"] = std::move(diag);
  return j.dump(1) + "\n";
}

FitArtifact artifact_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::SchemaError, std::string("artifact is not valid JSON: ") + e.what());
  }
  if (get<std::string>(j, "schema") != kFitSchema) {
    throw Error(Errc::SchemaError, "unsupported schema '" + get<std::string>(j, "schema") + "'");
  }
  FitArtifact fit;
  fit.n = get<Index>(j, "n");
  fit.seed = get<std::uint64_t>(j, "seed");
  fit.view_names = get<std::vector<std::string>>(j, "view_names");
  const Json& ranks = field(j, "ranks");
  fit.ranks.k0 = get<Index>(ranks, "k0");
  fit.ranks.k_per_view = get<std::vector<Index>>(ranks, "k_per_view");
  const Json& settings = field(j, "settings");
  fit.settings.nu0 = get<double>(settings, "nu0");
  fit.settings.sigma0_sq = get<double>(settings, "sigma0_sq");
  fit.settings.exact_term_count = get<bool>(settings, "exact_term_count");
  for (const Json& s : field(j, "preprocessing")) {
    PreprocessSpec spec;
    spec.mode = mode_from(get<std::string>(s, "mode"));
    for (const Json& c : field(s, "columns")) {
      ColumnTransform t;
      t.mean = get<double>(c, "mean");
      t.sd = get<double>(c, "sd");
      if (spec.mode == PreprocessMode::RankNormal) t.reference = get<std::vector<double>>(c, "reference");
      spec.columns.push_back(std::move(t));
    }
    fit.preprocessing.push_back(std::move(spec));
  }
  const Json& fe = field(j, "factor_estimate");
  fit.factor_estimate.F_hat = matrix_from(fe, "F_hat");
  fit.factor_estimate.avg_projection_singvals = vector_from(fe, "avg_projection_singvals");
  const Json& bases = field(fe, "bases");
  for (std::size_t m = 0; m < bases.size(); ++m) {
    Json wrapper = {{"U", bases[m]}};
    fit.factor_estimate.bases.push_back(matrix_from(wrapper, "U"));
  }
  for (const Json& p : field(j, "posteriors")) {
    ViewPosterior post;
    post.lambda_hat = matrix_from(p, "lambda_hat");
    post.K_scalar = get<double>(p, "K_scalar");
    post.nu_n = get<double>(p, "nu_n");
    post.delta_sq = vector_from(p, "delta_sq");
    post.tau_sq = get<double>(p, "tau_sq");
    post.rho = get<double>(p, "rho");
    post.rho_max = get<double>(p, "rho_max");
    post.nu0 = get<double>(p, "nu0");
    post.sigma0_sq = get<double>(p, "sigma0_sq");
    fit.posteriors.push_back(std::move(post));
  }
  const Json& diag = field(j, "diagnostics");
  for (const Json& t : field(diag, "jic")) {
    JicTrace trace;
    trace.per_k_loglik = get<std::vector<double>>(t, "per_k_loglik");
    trace.per_k_jic = get<std::vector<double>>(t, "per_k_jic");
    trace.chosen_k = get<Index>(t, "chosen_k");
    trace.n = get<Index>(t, "n");
    trace.p = get<Index>(t, "p");
    fit.diagnostics.jic.push_back(std::move(trace));
  }
  fit.diagnostics.warnings = get<std::vector<std::string>>(diag, "warnings");
  fit.diagnostics.k0_constraint_unsatisfied = get<bool>(diag, "k0_constraint_unsatisfied");
  try {
    check_invariants(fit);
  } catch (const Error& e) {
    throw Error(Errc::SchemaError, "artifact violates invariants: " + e.detail());
  }
  return fit;
}

void save_artifact(const std::filesystem::path& path, const FitArtifact& fit) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << artifact_to_json(fit);
}

FitArtifact load_artifact(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return artifact_from_json(text.str());
}

void write_intervals_csv(std::ostream& out, const intervals::IntervalMatrix& block) {
  out << "m,m_prime,j,j_prime,center,lo,hi,se,method\n";
  const auto method = intervals::method_name(block.method);
  for (std::size_t r = 0; r < block.rows.size(); ++r) {
    for (std::size_t c = 0; c < block.cols.size(); ++c) {
      const auto& iv = block.at(r, c);
      out << block.m << ',' << block.m_prime << ',' << block.rows[r] << ',' << block.cols[c] << ','
          << format_double(iv.center) << ',' << format_double(iv.lo()) << ',' << format_double(iv.hi()) << ','
          << format_double(iv.se) << ',' << method << '\n';
    }
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
}

Matrix correlation_block(const FitArtifact& fit, std::size_t m, std::size_t mp, bool threshold, double alpha,
                         const covariance::CovarianceOptions& options) {
  const auto blocks = covariance::point_estimates(fit, options);
  const Matrix& La = blocks.loadings.at(m);
  const Matrix& Lb = blocks.loadings.at(mp);
  const Vector da = (La.rowwise().squaredNorm() + blocks.psi[m]).cwiseSqrt();
  const Vector db = (Lb.rowwise().squaredNorm() + blocks.psi[mp]).cwiseSqrt();
  Matrix C = m == mp ? blocks.intra(m) : blocks.inter(m, mp);
  C = da.cwiseInverse().asDiagonal() * C * db.cwiseInverse().asDiagonal();
  if (m == mp) C.diagonal().setOnes();
  if (threshold) {
    const auto iv = intervals::interval_matrix(fit, m, mp, alpha, intervals::Method::Bvm);
    for (Index r = 0; r < C.rows(); ++r) {
      for (Index c = 0; c < C.cols(); ++c) {
        if (m == mp && r == c) continue;
        const auto& e = iv.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (e.lo() <= 0.0 && e.hi() >= 0.0) C(r, c) = 0.0;
      }
    }
  }
  return C;
}

void write_samples(const std::filesystem::path& path, const ViewPosterior& post, double rho, std::uint64_t draws,
                   std::uint64_t seed, std::uint64_t view_index) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write("FAMASMP1", 8);
  put_le(out, draws);
  put_le(out, static_cast<std::uint64_t>(post.p()));
  put_le(out, static_cast<std::uint64_t>(post.k0()));
  const posterior::PosteriorSampler sampler(post, rho, seed, view_index);
  for (std::uint64_t t = 0; t < draws; ++t) {
    const auto s = sampler.draw(t);
    for (Index j = 0; j < s.lambda_tilde.rows(); ++j) {
      for (Index c = 0; c < s.lambda_tilde.cols(); ++c) put_le(out, std::bit_cast<std::uint64_t>(s.lambda_tilde(j, c)));
    }
    for (Index j = 0; j < s.sigma_tilde_sq.size(); ++j) put_le(out, std::bit_cast<std::uint64_t>(s.sigma_tilde_sq[j]));
  }
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

SampleFile read_samples(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 8> magic{};
  in.read(magic.data(), 8);
  if (!in || std::memcmp(magic.data(), "FAMASMP1", 8) != 0) throw Error(Errc::SchemaError, "not a sample file");
  SampleFile f;
  f.draws = get_le(in);
  f.p = get_le(in);
  f.k0 = get_le(in);
  const auto p = static_cast<Index>(f.p), k0 = static_cast<Index>(f.k0);
  for (std::uint64_t t = 0; t < f.draws; ++t) {
    posterior::PosteriorSample s{Matrix(p, k0), Vector(p)};
    for (Index j = 0; j < p; ++j) {
      for (Index c = 0; c < k0; ++c) s.lambda_tilde(j, c) = std::bit_cast<double>(get_le(in));
    }
    for (Index j = 0; j < p; ++j) s.sigma_tilde_sq[j] = std::bit_cast<double>(get_le(in));
    f.samples.push_back(std::move(s));
  }
  return f;
}

sim::SimConfig load_sim_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
  sim::SimConfig c;
  for (const auto& [section, body] : tree) {
    if (section != "simulation") throw Error(Errc::SchemaError, "unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      const std::string v = node.get_value<std::string>();
      if (key == "n") c.n = parse_one<Index>(v, key);
      else if (key == "p") c.p = parse_list<Index>(v, key);
      else if (key == "k") c.k = parse_list<Index>(v, key);
      else if (key == "k0") c.k0 = parse_one<Index>(v, key);
      else if (key == "psi") c.psi = parse_list<double>(v, key);
      else if (key == "sigma_lo") c.sigma_lo = parse_one<double>(v, key);
      else if (key == "sigma_hi") c.sigma_hi = parse_one<double>(v, key);
      else if (key == "reps") c.reps = parse_one<std::size_t>(v, key);
      else if (key == "seed") c.seed = parse_one<std::uint64_t>(v, key);
      else if (key == "alpha") c.alpha = parse_one<double>(v, key);
      else if (key == "submatrix_size") c.submatrix_size = parse_one<Index>(v, key);
      else if (key == "rank_mode") {
        if (v == "oracle") c.rank_mode = sim::RankMode::Oracle;
        else if (v == "estimate") c.rank_mode = sim::RankMode::Estimate;
        else throw Error(Errc::SchemaError, "rank_mode must be oracle or estimate");
      } else if (key == "baseline") c.baseline = parse_bool(v, key);
      else if (key == "noiseless") c.noiseless = parse_bool(v, key);
      else throw Error(Errc::SchemaError, "unknown key '" + key + "'");
    }
  }
  // A single value for psi or k applies to every view.
  if (c.psi.size() == 1 && c.p.size() > 1) c.psi.assign(c.p.size(), c.psi.front());
  if (c.k.size() == 1 && c.p.size() > 1) c.k.assign(c.p.size(), c.k.front());
  return c;
}

void write_sim_csv(std::ostream& out, const sim::SimReport& report) {
  out << "replicate,metric,value\n";
  auto row = [&](std::size_t r, const std::string& metric, double value) {
    out << r << ',' << metric << ',' << format_double(value) << '\n';
  };
  for (const auto& r : report.replicates) {
    row(r.index, "ok", r.ok ? 1.0 : 0.0);
    if (!r.ok) continue;
    row(r.index, "rel_frob_overall", r.errors.overall);
    for (std::size_t m = 0; m < r.errors.intra.size(); ++m) row(r.index, "rel_frob_intra_" + std::to_string(m), r.errors.intra[m]);
    for (std::size_t q = 0; q < r.clt.pairs.size(); ++q) {
      const auto [a, b] = r.clt.pairs[q];
      const std::string tag = std::to_string(a) + "_" + std::to_string(b);
      row(r.index, "rel_frob_inter_" + tag, r.errors.inter[q]);
    }
    const std::pair<const char*, const sim::CoverageResult*> covs[] = {
        {"clt", &r.clt}, {"bvm", &r.bvm}, {"bvm_unit_rho", &r.bvm_unit_rho}};
    for (const auto& [name, cov] : covs) {
      for (std::size_t m = 0; m < cov->intra.size(); ++m) {
        row(r.index, std::string("coverage_") + name + "_intra_" + std::to_string(m), cov->intra[m]);
      }
      for (std::size_t q = 0; q < cov->pairs.size(); ++q) {
        row(r.index,
            std::string("coverage_") + name + "_inter_" + std::to_string(cov->pairs[q].first) + "_" +
                std::to_string(cov->pairs[q].second),
            cov->inter[q]);
      }
    }
    row(r.index, "procrustes_error", r.procrustes);
    for (std::size_t m = 0; m < r.k_hat.size(); ++m) row(r.index, "k_hat_" + std::to_string(m), static_cast<double>(r.k_hat[m]));
    row(r.index, "k0_hat", static_cast<double>(r.k0_hat));
    row(r.index, "ranks_recovered", r.ranks_recovered ? 1.0 : 0.0);
    if (report.config.baseline) {
      row(r.index, "baseline_rel_frob_overall", r.baseline.overall);
      for (std::size_t m = 0; m < r.baseline.intra.size(); ++m) {
        row(r.index, "baseline_rel_frob_intra_" + std::to_string(m), r.baseline.intra[m]);
      }
    }
  }
}

std::string sim_report_json(const sim::SimReport& report) {
  const auto& c = report.config;
  Json j;
  j["schema"] = kSimSchema;
  j["config"] = {{"n", c.n},
                 {"p", c.p},
                 {"k", c.k},
                 {"k0", c.k0},
                 {"psi", c.psi},
                 {"sigma_range", {c.sigma_lo, c.sigma_hi}},
                 {"reps", c.reps},
                 {"seed", c.seed},
                 {"alpha", c.alpha},
                 {"submatrix_size", c.submatrix_size},
                 {"rank_mode", c.rank_mode == sim::RankMode::Oracle ? "oracle" : "estimate"},
                 {"baseline", c.baseline},
                 {"noiseless", c.noiseless}};
  Json agg = Json::object();
  for (const auto& s : report.aggregates) {
    agg[s.metric] = {{"mean", s.mean}, {"median", s.median}, {"count", s.count}};
  }
  j["aggregates"] = std::move(agg);
  Json reps = Json::array();
  for (const auto& r : report.replicates) {
    Json x;
    x["replicate"] = r.index;
    x["ok"] = r.ok;
    if (!r.ok) {
      x["error"] = r.error;
    } else {
      x["k_hat"] = r.k_hat;
      x["k0_hat"] = r.k0_hat;
      x["factor_usage"] = r.factor_usage;
      x["errors"] = block_errors_json(r.errors);
      x["procrustes_error"] = r.procrustes;
      if (c.baseline) x["baseline_errors"] = block_errors_json(r.baseline);
    }
    reps.push_back(std::move(x));
  }
  j["replicates"] = std::move(reps);
  return j.dump(1) + "\n";
}

void write_timing_csv(std::ostream& out, const sim::SimReport& report) {
  out << "replicate,wall_time_seconds\n";
  for (const auto& r : report.replicates) out << r.index << ',' << format_double(r.wall_time) << '\n';
}

std::vector<ViewConfig> load_view_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
  std::vector<ViewConfig> out;
  const std::filesystem::path base = path.parent_path();
  for (const auto& [section, body] : tree) {
    if (section.rfind("view.", 0) != 0) continue;
    ViewConfig v;
    v.name = section.substr(5);
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      if (key == "path") {
        v.path = value;
        if (v.path.is_relative()) v.path = base / v.path;
      } else if (key == "k") {
        v.k = parse_one<Index>(value, key);
      } else {
        throw Error(Errc::SchemaError, "unknown key '" + key + "' in [" + section + "]");
      }
    }
    if (v.path.empty()) throw Error(Errc::SchemaError, "[" + section + "] needs a path");
    out.push_back(std::move(v));
  }
  if (out.empty()) throw Error(Errc::SchemaError, "no [view.<name>] sections in " + path.string());
  return out;
}

}  // namespace fama::io
