#include "pdlm/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pdlm/errors.hpp"

namespace pdlm {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

struct Row {
  std::size_t line;
  std::vector<double> values;
};

// Non-comment rows with their line numbers. Trailing blank lines are dropped;
// any other blank or non-numeric field is an error.
std::vector<Row> numeric_rows(std::istream& in, const std::string& what) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!trim(line).empty() && trim(line).front() == '#') continue;
    lines.emplace_back(no, line);
  }
  while (!lines.empty() && trim(lines.back().second).empty()) lines.pop_back();
  std::vector<Row> rows;
  for (const auto& [ln, text] : lines) {
    if (trim(text).empty()) throw DataError(what + ": empty row", ln);
    Row r{ln, {}};
    for (std::string_view f : split_commas(text)) {
      double v;
      if (!parse_double(f, v)) throw DataError(what + ": cannot parse '" + std::string(trim(f)) + "'", ln);
      if (!std::isfinite(v)) throw DataError(what + ": non-finite value", ln);
      r.values.push_back(v);
    }
    if (!rows.empty() && r.values.size() != rows.front().values.size()) {
      throw DataError(what + ": row has " + std::to_string(r.values.size()) + " fields, expected " +
                          std::to_string(rows.front().values.size()),
                      ln);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  return f;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

Ingested ingest_series(std::istream& in, const IngestOptions& opt) {
  Ingested out;
  for (const Row& r : numeric_rows(in, "series")) {
    if (r.values.size() == 1) {
      const double a = opt.degrees ? r.values[0] * std::numbers::pi / 180.0 : r.values[0];
      out.obs.push_back(angle_to_unit(Angle(a)));
      continue;
    }
    Vector v = Eigen::Map<const Vector>(r.values.data(), static_cast<Eigen::Index>(r.values.size()));
    const double norm = v.norm();
    if (norm == 0.0) throw DataError("series: zero vector", r.line);
    if (std::abs(norm - 1.0) > 1e-6) {
      out.warnings.push_back("line " + std::to_string(r.line) + ": renormalized vector of norm " + format_double(norm));
    }
    out.obs.emplace_back(std::move(v));
  }
  if (out.obs.empty()) throw DataError("series: no observations");
  return out;
}

Ingested ingest_series(const std::string& path, const IngestOptions& opt) {
  std::ifstream f = open_input(path);
  return ingest_series(f, opt);
}

std::vector<std::vector<double>> read_numeric_rows(std::istream& in, const std::string& what) {
  std::vector<std::vector<double>> out;
  for (Row& r : numeric_rows(in, what)) out.push_back(std::move(r.values));
  return out;
}

std::optional<UnitObservation> parse_observation(const std::string& line, Eigen::Index n, const IngestOptions& opt,
                                                 std::size_t line_no, std::vector<std::string>* warnings) {
  const std::string_view t = trim(line);
  if (t.empty() || t.front() == '#') return std::nullopt;
  std::vector<double> values;
  for (std::string_view f : split_commas(t)) {
    double v;
    if (!parse_double(f, v)) throw DataError("cannot parse '" + std::string(trim(f)) + "'", line_no);
    if (!std::isfinite(v)) throw DataError("non-finite value", line_no);
    values.push_back(v);
  }
  if (values.size() == 1) {
    if (n != 2) throw DataError("angle rows need n = 2", line_no);
    return angle_to_unit(Angle(opt.degrees ? values[0] * std::numbers::pi / 180.0 : values[0]));
  }
  if (static_cast<Eigen::Index>(values.size()) != n) {
    throw DataError("expected " + std::to_string(n) + " components", line_no);
  }
  Vector v = Eigen::Map<const Vector>(values.data(), n);
  const double norm = v.norm();
  if (norm == 0.0) throw DataError("zero vector", line_no);
  if (std::abs(norm - 1.0) > 1e-6 && warnings) {
    warnings->push_back("line " + std::to_string(line_no) + ": renormalized vector of norm " + format_double(norm));
  }
  return UnitObservation(std::move(v));
}

std::vector<double> angles_of(const std::vector<UnitObservation>& obs) {
  std::vector<double> a;
  a.reserve(obs.size());
  for (const auto& u : obs) a.push_back(unit_to_angle(u).radians());
  return a;
}

Design regression_design(Eigen::Index n, const std::vector<std::vector<double>>& covariates) {
  if (covariates.empty()) throw DataError("covariates: no rows");
  std::vector<Matrix> fs;
  for (const auto& x : covariates) {
    const auto m = static_cast<Eigen::Index>(x.size());
    Matrix f = Matrix::Zero(n, n * m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < m; ++k) f(i, i * m + k) = x[static_cast<std::size_t>(k)];
    fs.push_back(std::move(f));
  }
  return Design::per_period(std::move(fs));
}

std::string format_number(double x) { return format_double(x); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Matrix json_matrix(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (j.is_number()) {
    if (rows != cols) throw ConfigError(what + ": scalar shorthand needs a square matrix");
    return j.get<double>() * Matrix::Identity(rows, cols);
  }
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ConfigError(what + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(what + ": expected " + std::to_string(cols) + " columns");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

Vector json_vector(const json& j, Eigen::Index size, const std::string& what) {
  if (j.is_number()) return Vector::Constant(size, j.get<double>());
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ConfigError(what + ": expected length " + std::to_string(size));
  }
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json matrix_json(const Matrix& m) {
  json j = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(std::move(row));
  }
  return j;
}

json vector_json(const Vector& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::Index RunConfig::p() const {
  switch (design) {
    case DesignKind::local_level: return n;
    case DesignKind::regression: return n * m;
    case DesignKind::explicit_F: return p_explicit;
  }
  return n;
}

Priors RunConfig::resolved_priors() const { return priors ? *priors : Priors::defaults(n, p()); }

Design RunConfig::build_design() const {
  switch (design) {
    case DesignKind::local_level: return Design::constant(Matrix::Identity(n, n));
    case DesignKind::regression: {
      std::ifstream f = open_input(covariates_path);
      const auto rows = read_numeric_rows(f, "covariates");
      if (!rows.empty() && static_cast<Eigen::Index>(rows.front().size()) != m) {
        throw DataError("covariates: expected " + std::to_string(m) + " columns");
      }
      return regression_design(n, rows);
    }
    case DesignKind::explicit_F: {
      std::ifstream f = open_input(F_path);
      const auto rows = read_numeric_rows(f, "F file");
      std::vector<Matrix> fs;
      for (const auto& r : rows) {
        if (static_cast<Eigen::Index>(r.size()) != n * p_explicit) {
          throw DataError("F file: expected n * p = " + std::to_string(n * p_explicit) + " entries per row");
        }
        fs.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            r.data(), n, p_explicit));
      }
      return Design::per_period(std::move(fs));
    }
  }
  throw ConfigError("unknown design");
}

ModelSpec RunConfig::model_spec() const { return ModelSpec{build_design(), resolved_priors(), fixed, truncate}; }

void RunConfig::validate() const {
  if (n < 2) throw ConfigError("n must be >= 2");
  if (p() < 1) throw ConfigError("design implies p < 1");
  if (design == DesignKind::regression && covariates_path.empty()) throw ConfigError("regression design needs covariates");
  if (design == DesignKind::explicit_F && F_path.empty()) throw ConfigError("explicit design needs F_file");
  resolved_priors().validate(n, p());
  gibbs.validate();
  swarm.validate();
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (theta) {
    if (theta->G.rows() != p() || theta->W.rows() != p() || theta->Sigma.rows() != n) {
      throw ConfigError("theta dimensions do not match (n, p)");
    }
  }
  if ((fixed.G || fixed.W || fixed.Gamma || fixed.gamma) && !theta) {
    throw ConfigError("fixed parameters need values in \"theta\"");
  }
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j, {"n", "design", "covariates", "m", "F_file", "p", "priors", "gibbs", "rbpf", "truncate", "fixed",
                       "theta", "seed", "threads"},
                   "config");
    RunConfig c;
    take(j, "n", c.n);
    const std::string design = j.value("design", std::string("local-level"));
    if (design == "local-level") {
      c.design = DesignKind::local_level;
    } else if (design == "regression") {
      c.design = DesignKind::regression;
      take(j, "covariates", c.covariates_path);
      take(j, "m", c.m);
      if (c.m == 0 && !c.covariates_path.empty()) {
        std::ifstream f = open_input(c.covariates_path);
        const auto rows = read_numeric_rows(f, "covariates");
        if (!rows.empty()) c.m = static_cast<Eigen::Index>(rows.front().size());
      }
    } else if (design == "explicit") {
      c.design = DesignKind::explicit_F;
      take(j, "F_file", c.F_path);
      take(j, "p", c.p_explicit);
    } else {
      throw ConfigError("design must be local-level, regression or explicit");
    }
    const Eigen::Index n = c.n;
    const Eigen::Index p = c.p();
    if (n < 2 || p < 1) throw ConfigError("invalid dimensions");

    if (j.contains("priors")) {
      const json& pj = j.at("priors");
      reject_unknown(pj, {"nu0", "Psi0", "Gbar0", "Omega0", "d0", "Phi0", "gammabar0", "Lambda0", "s0_mean", "P0"},
                     "priors");
      Priors pr = Priors::defaults(n, p);
      take(pj, "nu0", pr.nu0);
      take(pj, "d0", pr.d0);
      if (pj.contains("Psi0")) pr.Psi0 = json_matrix(pj["Psi0"], p, p, "Psi0");
      if (pj.contains("Gbar0")) pr.Gbar0 = json_matrix(pj["Gbar0"], p, p, "Gbar0");
      if (pj.contains("Omega0")) pr.Omega0 = json_matrix(pj["Omega0"], p, p, "Omega0");
      if (pj.contains("Phi0")) pr.Phi0 = json_matrix(pj["Phi0"], n - 1, n - 1, "Phi0");
      if (pj.contains("gammabar0")) pr.gammabar0 = json_vector(pj["gammabar0"], n - 1, "gammabar0");
      if (pj.contains("Lambda0")) pr.Lambda0 = json_matrix(pj["Lambda0"], n - 1, n - 1, "Lambda0");
      if (pj.contains("s0_mean")) pr.s0_mean = json_vector(pj["s0_mean"], p, "s0_mean");
      if (pj.contains("P0")) pr.P0 = json_matrix(pj["P0"], p, p, "P0");
      c.priors = pr;
    }
    if (j.contains("gibbs")) {
      const json& g = j.at("gibbs");
      reject_unknown(g, {"iterations", "burn_in", "thin", "slice_steps", "store_paths", "store_lengths"}, "gibbs");
      take(g, "iterations", c.gibbs.iterations);
      take(g, "burn_in", c.gibbs.burn_in);
      take(g, "thin", c.gibbs.thin);
      take(g, "slice_steps", c.gibbs.slice_steps);
      take(g, "store_paths", c.gibbs.store_paths);
      take(g, "store_lengths", c.gibbs.store_lengths);
    }
    if (j.contains("rbpf")) {
      const json& r = j.at("rbpf");
      reject_unknown(r, {"M", "tau", "sigma_g", "L", "systematic"}, "rbpf");
      take(r, "M", c.swarm.M);
      take(r, "tau", c.swarm.tau);
      take(r, "sigma_g", c.swarm.sigma_g);
      take(r, "L", c.swarm.L);
      take(r, "systematic", c.swarm.systematic);
    }
    take(j, "truncate", c.truncate);
    if (j.contains("fixed")) {
      for (const auto& f : j.at("fixed")) {
        const std::string s = f.get<std::string>();
        if (s == "G") c.fixed.G = true;
        else if (s == "W") c.fixed.W = true;
        else if (s == "Gamma") c.fixed.Gamma = true;
        else if (s == "gamma") c.fixed.gamma = true;
        else if (s == "Sigma") c.fixed.Gamma = c.fixed.gamma = true;
        else throw ConfigError("fixed: unknown parameter '" + s + "'");
      }
    }
    if (j.contains("theta")) {
      const json& t = j.at("theta");
      reject_unknown(t, {"G", "W", "Sigma", "Gamma", "gamma"}, "theta");
      const Priors pr = c.resolved_priors();
      const ThetaDraw base = ThetaDraw::prior_mean(pr);
      SigmaStructured parts = base.sigma_parts;
      if (t.contains("Sigma")) {
        const Matrix s = json_matrix(t["Sigma"], n, n, "theta.Sigma");
        if (s(n - 1, n - 1) != 1.0) throw ConfigError("theta.Sigma must have bottom-right entry 1");
        parts = decompose_sigma(s);
      }
      if (t.contains("Gamma")) parts.Gamma = json_matrix(t["Gamma"], n - 1, n - 1, "theta.Gamma");
      if (t.contains("gamma")) parts.gamma = json_vector(t["gamma"], n - 1, "theta.gamma");
      const Matrix G = t.contains("G") ? json_matrix(t["G"], p, p, "theta.G") : base.G;
      const Matrix W = t.contains("W") ? json_matrix(t["W"], p, p, "theta.W") : base.W;
      c.theta = ThetaDraw::make(parts, G, W);
    }
    take(j, "seed", c.seed);
    take(j, "threads", c.threads);
    c.gibbs.seed = c.seed;
    c.gibbs.threads = c.threads;
    c.swarm.threads = c.threads;
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["n"] = n;
  switch (design) {
    case DesignKind::local_level: j["design"] = "local-level"; break;
    case DesignKind::regression:
      j["design"] = "regression";
      j["covariates"] = covariates_path;
      j["m"] = m;
      break;
    case DesignKind::explicit_F:
      j["design"] = "explicit";
      j["F_file"] = F_path;
      j["p"] = p_explicit;
      break;
  }
  const Priors pr = resolved_priors();
  j["priors"] = {{"nu0", pr.nu0},
                 {"Psi0", matrix_json(pr.Psi0)},
                 {"Gbar0", matrix_json(pr.Gbar0)},
                 {"Omega0", matrix_json(pr.Omega0)},
                 {"d0", pr.d0},
                 {"Phi0", matrix_json(pr.Phi0)},
                 {"gammabar0", vector_json(pr.gammabar0)},
                 {"Lambda0", matrix_json(pr.Lambda0)},
                 {"s0_mean", vector_json(pr.s0_mean)},
                 {"P0", matrix_json(pr.P0)}};
  j["gibbs"] = {{"iterations", gibbs.iterations}, {"burn_in", gibbs.burn_in},     {"thin", gibbs.thin},
                {"slice_steps", gibbs.slice_steps}, {"store_paths", gibbs.store_paths},
                {"store_lengths", gibbs.store_lengths}};
  j["rbpf"] = {{"M", swarm.M}, {"tau", swarm.threshold()}, {"sigma_g", swarm.sigma_g}, {"L", swarm.L},
               {"systematic", swarm.systematic}};
  j["truncate"] = truncate;
  json fx = json::array();
  if (fixed.G) fx.push_back("G");
  if (fixed.W) fx.push_back("W");
  if (fixed.Gamma) fx.push_back("Gamma");
  if (fixed.gamma) fx.push_back("gamma");
  j["fixed"] = fx;
  if (theta) {
    j["theta"] = {{"G", matrix_json(theta->G)}, {"W", matrix_json(theta->W)}, {"Sigma", matrix_json(theta->Sigma)}};
  }
  j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

std::uint64_t RunConfig::hash() const {
  json j = to_json();
  for (const char* k : {"gibbs", "rbpf", "seed", "threads"}) j.erase(k);
  return fnv1a(j.dump());
}

std::vector<std::string> draw_columns(Eigen::Index n, Eigen::Index p, bool with_s_T) {
  std::vector<std::string> c{"iteration"};
  auto mat = [&](const char* name, Eigen::Index r, Eigen::Index k) {
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index q = 0; q < k; ++q) c.push_back(std::string(name) + "[" + std::to_string(i) + "," + std::to_string(q) + "]");
  };
  mat("Gamma", n - 1, n - 1);
  for (Eigen::Index i = 0; i < n - 1; ++i) c.push_back("gamma[" + std::to_string(i) + "]");
  mat("G", p, p);
  mat("W", p, p);
  if (with_s_T)
    for (Eigen::Index i = 0; i < p; ++i) c.push_back("s_T[" + std::to_string(i) + "]");
  return c;
}

namespace {

std::vector<double> draw_row(const PosteriorDraws& d, std::size_t k, bool with_s_T) {
  std::vector<double> row{static_cast<double>(d.iteration[k])};
  const ThetaDraw& th = d.theta[k];
  auto mat = [&](const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index q = 0; q < m.cols(); ++q) row.push_back(m(i, q));
  };
  mat(th.sigma_parts.Gamma);
  for (Eigen::Index i = 0; i < th.sigma_parts.gamma.size(); ++i) row.push_back(th.sigma_parts.gamma[i]);
  mat(th.G);
  mat(th.W);
  if (with_s_T)
    for (Eigen::Index i = 0; i < d.s_T[k].size(); ++i) row.push_back(d.s_T[k][i]);
  return row;
}

void push_row(PosteriorDraws& d, const std::vector<double>& row, bool with_s_T) {
  const Eigen::Index n = d.n;
  const Eigen::Index p = d.p;
  std::size_t at = 0;
  d.iteration.push_back(static_cast<std::size_t>(row[at++]));
  auto mat = [&](Eigen::Index r, Eigen::Index k) {
    Matrix m(r, k);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index q = 0; q < k; ++q) m(i, q) = row[at++];
    return m;
  };
  SigmaStructured parts;
  parts.Gamma = mat(n - 1, n - 1);
  parts.gamma.resize(n - 1);
  for (Eigen::Index i = 0; i < n - 1; ++i) parts.gamma[i] = row[at++];
  Matrix G = mat(p, p);
  Matrix W = mat(p, p);
  d.theta.push_back(ThetaDraw::make(std::move(parts), std::move(G), std::move(W)));
  if (with_s_T) {
    Vector s(p);
    for (Eigen::Index i = 0; i < p; ++i) s[i] = row[at++];
    d.s_T.push_back(std::move(s));
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

constexpr char kMagic[8] = {'P', 'D', 'L', 'M', 'D', 'R', 'W', '1'};

}  // namespace

void write_draws_csv(std::ostream& out, const PosteriorDraws& d, const DrawMetadata& meta) {
  const bool with_s_T = !d.s_T.empty();
  out << "# pdlm-draws seed=" << meta.seed << " config_hash=" << meta.config_hash << " n=" << d.n << " p=" << d.p
      << "\n";
  out << join(draw_columns(d.n, d.p, with_s_T)) << "\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    const std::vector<double> row = draw_row(d, k, with_s_T);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

PosteriorDraws read_draws_csv(std::istream& in, DrawMetadata* meta) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# pdlm-draws", 0) != 0) throw DataError("draws: missing metadata line", 1);
  PosteriorDraws d;
  DrawMetadata md;
  {
    std::istringstream ss(line.substr(12));
    std::string kv;
    while (ss >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string k = kv.substr(0, eq);
      const std::uint64_t v = std::stoull(kv.substr(eq + 1));
      if (k == "seed") md.seed = v;
      else if (k == "config_hash") md.config_hash = v;
      else if (k == "n") d.n = static_cast<Eigen::Index>(v);
      else if (k == "p") d.p = static_cast<Eigen::Index>(v);
    }
  }
  if (d.n < 2 || d.p < 1) throw DataError("draws: bad dimensions in metadata", 1);
  if (!std::getline(in, line)) throw DataError("draws: missing header", 2);
  const std::string header(trim(line));
  bool with_s_T;
  if (header == join(draw_columns(d.n, d.p, true))) with_s_T = true;
  else if (header == join(draw_columns(d.n, d.p, false))) with_s_T = false;
  else throw DataError("draws: header does not match the schema for n, p", 2);
  const std::size_t width = draw_columns(d.n, d.p, with_s_T).size();
  std::size_t no = 2;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (std::string_view f : split_commas(line)) {
      double v;
      if (!parse_double(f, v)) throw DataError("draws: cannot parse '" + std::string(trim(f)) + "'", no);
      row.push_back(v);
    }
    if (row.size() != width) throw DataError("draws: wrong column count", no);
    push_row(d, row, with_s_T);
  }
  d.seed = md.seed;
  if (meta) *meta = md;
  return d;
}

void write_draws_binary(std::ostream& out, const PosteriorDraws& d, const DrawMetadata& meta) {
  static_assert(std::endian::native == std::endian::little, "binary draws assume a little-endian host");
  const bool with_s_T = !d.s_T.empty();
  const std::uint64_t header[7] = {fnv1a(join(draw_columns(d.n, d.p, with_s_T))),
                                   meta.seed,
                                   meta.config_hash,
                                   static_cast<std::uint64_t>(d.n),
                                   static_cast<std::uint64_t>(d.p),
                                   with_s_T ? 1u : 0u,
                                   d.size()};
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const std::vector<double> row = draw_row(d, k, with_s_T);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

PosteriorDraws read_draws_binary(std::istream& in, DrawMetadata* meta) {
  char magic[8];
  std::uint64_t header[7];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw DataError("draws: bad binary magic");
  if (!in.read(reinterpret_cast<char*>(header), sizeof header)) throw DataError("draws: truncated binary header");
  PosteriorDraws d;
  d.n = static_cast<Eigen::Index>(header[3]);
  d.p = static_cast<Eigen::Index>(header[4]);
  const bool with_s_T = header[5] != 0;
  if (d.n < 2 || d.p < 1 || header[0] != fnv1a(join(draw_columns(d.n, d.p, with_s_T)))) {
    throw DataError("draws: binary schema hash mismatch");
  }
  const std::size_t width = draw_columns(d.n, d.p, with_s_T).size();
  std::vector<double> row(width);
  for (std::uint64_t k = 0; k < header[6]; ++k) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(width * sizeof(double)))) {
      throw DataError("draws: truncated binary body");
    }
    push_row(d, row, with_s_T);
  }
  d.seed = header[1];
  if (meta) *meta = {header[1], header[2]};
  return d;
}

PosteriorDraws read_draws(const std::string& path, DrawMetadata* meta) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  char first = static_cast<char>(f.peek());
  if (first == 'P') return read_draws_binary(f, meta);
  return read_draws_csv(f, meta);
}

}  // namespace pdlm
