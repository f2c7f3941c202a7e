#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdlm/directional.hpp"
#include "pdlm/gibbs.hpp"
#include "pdlm/kalman.hpp"
#include "pdlm/rbpf.hpp"

// File formats and the run configuration.

namespace pdlm {

struct IngestOptions {
  bool degrees = false;
};

struct Ingested {
  std::vector<UnitObservation> obs;
  std::vector<std::string> warnings;
};

// One angle per row (radians, or degrees with `degrees`) or n comma-separated
// vector components per row. Lines starting with '#' are comments. Vector rows
// off the sphere by more than 1e-6 are renormalized with a warning.
Ingested ingest_series(std::istream& in, const IngestOptions& opt = {});
Ingested ingest_series(const std::string& path, const IngestOptions& opt = {});

// Comma-separated numeric rows of one common width.
std::vector<std::vector<double>> read_numeric_rows(std::istream& in, const std::string& what);

// One streamed record. Returns nothing for blank and comment lines; `n` is
// the expected dimension (an angle row needs n = 2).
std::optional<UnitObservation> parse_observation(const std::string& line, Eigen::Index n, const IngestOptions& opt,
                                                 std::size_t line_no, std::vector<std::string>* warnings = nullptr);

std::vector<double> angles_of(const std::vector<UnitObservation>& obs);

// F_t = I_n ⊗ x_t^T for covariate rows x_t.
Design regression_design(Eigen::Index n, const std::vector<std::vector<double>>& covariates);

enum class DesignKind { local_level, regression, explicit_F };

// Matrices in JSON are nested row arrays or a scalar c meaning c I; vectors
// are arrays or a scalar fill.
struct RunConfig {
  Eigen::Index n = 2;
  DesignKind design = DesignKind::local_level;
  std::string covariates_path;  // regression: one row of m covariates per period
  std::string F_path;           // explicit: one row of n * p entries (row-major F_t) per period
  Eigen::Index m = 0;           // covariate count (regression)
  Eigen::Index p_explicit = 0;  // explicit design
  std::optional<Priors> priors;  // defaults(n, p) when absent
  GibbsConfig gibbs;
  SwarmConfig swarm;
  bool truncate = true;
  FixedMask fixed;
  std::optional<ThetaDraw> theta;  // fixed or starting values
  std::uint64_t seed = 1;
  int threads = 1;

  Eigen::Index p() const;
  Priors resolved_priors() const;
  // Reads covariate / F files (paths relative to the working directory).
  Design build_design() const;
  ModelSpec model_spec() const;
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;
  // FNV-1a of the canonical JSON of the model part (design, priors,
  // truncation, fixed values); sampler settings and seed are left out.
  std::uint64_t hash() const;
};

std::uint64_t fnv1a(const std::string& s);

// Shortest decimal that reads back to the same double.
std::string format_number(double x);

Matrix json_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what);
Vector json_vector(const nlohmann::json& j, Eigen::Index size, const std::string& what);
nlohmann::json matrix_json(const Matrix& m);
nlohmann::json vector_json(const Vector& v);

struct DrawMetadata {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

// Column names of the draw store: iteration, Gamma, gamma, G, W (all entries,
// row-major), then s_T when stored.
std::vector<std::string> draw_columns(Eigen::Index n, Eigen::Index p, bool with_s_T);

// CSV with a '#' metadata line and a header; values in shortest round-trip
// decimal form, so every double reads back exactly.
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws, const DrawMetadata& meta);
PosteriorDraws read_draws_csv(std::istream& in, DrawMetadata* meta = nullptr);

// Little-endian binary: magic, schema hash of the column list, n, p, rows.
void write_draws_binary(std::ostream& out, const PosteriorDraws& draws, const DrawMetadata& meta);
PosteriorDraws read_draws_binary(std::istream& in, DrawMetadata* meta = nullptr);

// Either format, chosen by the file's first bytes.
PosteriorDraws read_draws(const std::string& path, DrawMetadata* meta = nullptr);

}  // namespace pdlm
