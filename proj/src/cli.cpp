#include "pdlm/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdlm/errors.hpp"
#include "pdlm/forecast.hpp"
#include "pdlm/io.hpp"
#include "pdlm/rbpf.hpp"
#include "pdlm/validation.hpp"

namespace pdlm {

using nlohmann::json;

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool degrees = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  cmd->add_option("--threads", c.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  cmd->add_flag("--degrees", c.degrees, "angles in degrees on input and output");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  if (c.seed) cfg.seed = cfg.gibbs.seed = *c.seed;
  if (c.threads) cfg.threads = cfg.gibbs.threads = cfg.swarm.threads = *c.threads;
  cfg.validate();
  return cfg;
}

// "-" or empty means the fallback stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback, bool binary = false) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary : std::ios::out);
      if (!*file_) throw DataError("cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

const ThetaDraw& require_theta(const RunConfig& cfg, const char* cmd) {
  if (!cfg.theta) throw ConfigError(std::string(cmd) + " needs fixed parameters in the config \"theta\" block");
  return *cfg.theta;
}

std::vector<UnitObservation> load_series(const std::string& path, const RunConfig& cfg, bool degrees,
                                         std::ostream& err) {
  Ingested in = ingest_series(path, IngestOptions{degrees});
  for (const auto& w : in.warnings) err << "warning: " << w << "\n";
  if (in.obs.front().dim() != cfg.n) {
    throw DataError("series has dimension " + std::to_string(in.obs.front().dim()) + " but the config has n = " +
                    std::to_string(cfg.n));
  }
  return std::move(in.obs);
}

double out_angle(double radians, bool degrees) { return degrees ? radians * kRadToDeg : radians; }

json theta_json(const ThetaDraw& th) {
  return {{"G", matrix_json(th.G)}, {"W", matrix_json(th.W)}, {"Sigma", matrix_json(th.Sigma)}};
}

json interval_json(const ForecastInterval& iv, bool degrees) {
  return {{"lower", out_angle(iv.lower.radians(), degrees)},
          {"upper", out_angle(iv.upper.radians(), degrees)},
          {"wraps", iv.wraps},
          {"length", out_angle(iv.length(), degrees)}};
}

Faults parse_faults(const std::vector<std::string>& names) {
  Faults f;
  for (const auto& s : names) {
    if (s == "skip-lengths") f.skip_lengths = true;
    else if (s == "wrong-dT") f.wrong_dT = true;
    else if (s == "transposed-G") f.transposed_G = true;
  }
  return f;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::size_t T = 200;
  std::string out, truth_out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.common);
  const Priors pr = cfg.resolved_priors();
  const Design F = cfg.build_design();
  if (!F.is_constant() && F.periods() < a.T) throw DataError("design has fewer periods than --T");
  Rng rng(cfg.seed);
  const ThetaDraw theta = cfg.theta ? *cfg.theta : sample_theta_prior(pr, cfg.n, false, cfg.truncate, rng);
  const JointDraw d = simulate_series(theta, F, pr, a.T, rng);
  Output o(a.out, out);
  for (const auto& u : d.obs) {
    if (cfg.n == 2) {
      *o << format_number(out_angle(unit_to_angle(u).radians(), a.common.degrees)) << "\n";
    } else {
      for (Eigen::Index i = 0; i < u.dim(); ++i) *o << (i ? "," : "") << format_number(u[i]);
      *o << "\n";
    }
  }
  if (!a.truth_out.empty()) {
    Output t(a.truth_out, out);
    json j = theta_json(theta);
    j["lengths"] = d.lengths;
    json states = json::array();
    for (const auto& s : d.states) states.push_back(vector_json(s));
    j["states"] = states;
    *t << j.dump(2) << "\n";
  }
  return kOk;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  Common common;
  std::string data, out;
  std::string format = "csv";
  std::optional<std::size_t> iterations, burn_in, thin;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  if (a.iterations) cfg.gibbs.iterations = *a.iterations;
  if (a.burn_in) cfg.gibbs.burn_in = *a.burn_in;
  if (a.thin) cfg.gibbs.thin = *a.thin;
  cfg.gibbs.validate();
  const auto obs = load_series(a.data, cfg, a.common.degrees, err);
  ModelSpec spec = cfg.model_spec();
  if (!spec.F.is_constant()) {
    if (spec.F.periods() < obs.size()) throw DataError("design has fewer periods than the series");
    spec.F = spec.F.prefix(obs.size());
  }
  const PosteriorDraws draws = run_gibbs(obs, spec, cfg.gibbs, cfg.theta);
  const DrawMetadata meta{cfg.seed, cfg.hash()};
  const bool binary = a.format == "binary";
  Output o(a.out, out, binary);
  if (binary) write_draws_binary(*o, draws, meta);
  else write_draws_csv(*o, draws, meta);
  return kOk;
}

// ---- filter ---------------------------------------------------------------

struct FilterArgs {
  Common common;
  std::string data = "-";
  std::vector<double> alphas{0.1};
  std::size_t predictive_draws = 1000;
  std::optional<std::size_t> particles;
};

int cmd_filter(const FilterArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  if (a.particles) cfg.swarm.M = *a.particles;
  cfg.swarm.validate();
  const ModelSpec spec = cfg.model_spec();
  const StateSpaceParams params = state_space(spec, require_theta(cfg, "filter"));
  std::unique_ptr<std::ifstream> file;
  std::istream* src = &in;
  if (a.data != "-") {
    file = std::make_unique<std::ifstream>(a.data);
    if (!*file) throw DataError("cannot open " + a.data);
    src = file.get();
  }
  const Rng root(cfg.seed);
  const Rng filter_root = root.substream(1);
  Swarm swarm = bootstrap_swarm(params, cfg.swarm);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> warnings;
  while (std::getline(*src, line)) {
    ++line_no;
    const auto u = parse_observation(line, cfg.n, IngestOptions{a.common.degrees}, line_no, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    warnings.clear();
    if (!u) continue;
    if (!spec.F.is_constant() && spec.F.periods() < swarm.t + 1) throw DataError("design exhausted", line_no);
    const StepRecord rec = rbpf_step(swarm, *u, params, cfg.swarm, filter_root);
    json j = {{"t", rec.t}, {"ess", rec.ess}, {"resampled", rec.resampled}, {"log_evidence", rec.log_evidence}};
    if (rec.nonfinite) j["nonfinite"] = rec.nonfinite;
    const bool next_known = spec.F.is_constant() || spec.F.periods() >= swarm.t + 1;
    if (cfg.n == 2 && next_known) {
      Rng rng = root.substream(2, swarm.t);
      const auto ens = ForecastEnsemble::from_units(
          predictive_sample(swarm, spec.F.at(swarm.t + 1), params, a.predictive_draws, rng), swarm.t);
      json q = json::object();
      q["0.5"] = out_angle(circular_median(ens.draws).radians(), a.common.degrees);
      for (double alpha : a.alphas) {
        for (double level : {alpha / 2.0, 1.0 - alpha / 2.0}) {
          q[format_number(level)] = out_angle(circular_quantile(ens.draws, level).radians(), a.common.degrees);
        }
      }
      j["quantiles"] = q;
    }
    out << j.dump() << std::endl;  // flushed per step
  }
  return kOk;
}

// ---- forecast -------------------------------------------------------------

struct ForecastArgs {
  Common common;
  std::string draws, samples_out;
  std::size_t period = 0;
  std::size_t n_draws = 5000;
  double alpha = 0.1;
  bool ignore_hash = false;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.common);
  DrawMetadata meta;
  const PosteriorDraws post = read_draws(a.draws, &meta);
  if (!a.ignore_hash && meta.config_hash != cfg.hash()) {
    throw DataError("draw store was produced by a different configuration (hash mismatch)");
  }
  if (post.n != cfg.n || post.p != cfg.p()) throw DataError("draw store dimensions do not match the config");
  if (post.s_T.size() != post.size()) throw DataError("draw store has no s_T columns");
  const Design F = cfg.build_design();
  if (!F.is_constant() && a.period == 0) throw ConfigError("--period (the forecast target) is required for this design");
  const Matrix& F_next = F.at(F.is_constant() ? 1 : a.period);
  Rng rng = Rng(cfg.seed).substream(3);
  const auto units = posterior_predictive(post, F_next, a.n_draws, rng);
  json j;
  if (cfg.n == 2) {
    const auto ens = ForecastEnsemble::from_units(units);
    j["median"] = out_angle(circular_median(ens.draws).radians(), a.common.degrees);
    j["alpha"] = a.alpha;
    j["interval"] = interval_json(forecast_interval(ens, a.alpha), a.common.degrees);
    if (!a.samples_out.empty()) {
      Output s(a.samples_out, out);
      for (double d : ens.draws) *s << format_number(out_angle(d, a.common.degrees)) << "\n";
    }
  } else {
    Vector mean = Vector::Zero(cfg.n);
    for (const auto& u : units) mean += u.vector();
    mean /= static_cast<double>(units.size());
    j["mean_resultant"] = vector_json(mean);
    if (mean.norm() > 1e-8) j["mean_direction"] = vector_json(mean.normalized());
  }
  j["draws"] = a.n_draws;
  out << j.dump(2) << "\n";
  return kOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  Common common;
  std::string data, out;
  std::size_t t0 = 10;
  double alpha = 0.1;
  std::string method = "gibbs";
  std::size_t n_draws = 1000;
  std::optional<std::size_t> iterations, burn_in;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  if (a.iterations) cfg.gibbs.iterations = *a.iterations;
  if (a.burn_in) cfg.gibbs.burn_in = *a.burn_in;
  cfg.gibbs.validate();
  if (cfg.n != 2) throw ConfigError("evaluate scores angles (n = 2)");
  const auto obs = load_series(a.data, cfg, a.common.degrees, err);
  const ModelSpec spec = cfg.model_spec();
  if (!spec.F.is_constant() && spec.F.periods() < obs.size()) throw DataError("design has fewer periods than the series");
  const auto angles = angles_of(obs);

  Forecaster forecaster;
  std::optional<StateSpaceParams> params;
  std::optional<Swarm> swarm;
  const Rng root(cfg.seed);
  if (a.method == "gibbs") {
    forecaster = [&](std::size_t t) { return gibbs_one_step(obs, t, spec, cfg.gibbs, a.n_draws); };
  } else {
    params = state_space(spec, require_theta(cfg, "evaluate --method rbpf"));
    swarm = bootstrap_swarm(*params, cfg.swarm);
    forecaster = [&](std::size_t t) {
      // Only u_1..u_t enter the swarm before the forecast of t + 1.
      while (swarm->t < t) rbpf_step(*swarm, obs[swarm->t], *params, cfg.swarm, root.substream(1));
      Rng rng = root.substream(2, t);
      return ForecastEnsemble::from_units(predictive_sample(*swarm, spec.F.at(t + 1), *params, a.n_draws, rng), t)
          .draws;
    };
  }
  const RollingReport rep = rolling_evaluation(angles, a.t0, a.alpha, forecaster);
  json j = {{"method", a.method}, {"t0", a.t0}, {"alpha", a.alpha}, {"mce", rep.mce},
            {"mil", rep.mil},     {"ec", rep.ec}, {"mcrps", rep.mcrps}};
  json lo = json::array(), hi = json::array(), pt = json::array(), re = json::array();
  for (std::size_t i = 0; i < rep.periods.size(); ++i) {
    pt.push_back(out_angle(rep.point[i], a.common.degrees));
    re.push_back(out_angle(rep.realizations[i], a.common.degrees));
    lo.push_back(out_angle(rep.intervals[i].lower.radians(), a.common.degrees));
    hi.push_back(out_angle(rep.intervals[i].upper.radians(), a.common.degrees));
  }
  j["periods"] = rep.periods;
  j["realizations"] = re;
  j["point"] = pt;
  j["lower"] = lo;
  j["upper"] = hi;
  j["crps"] = rep.crps;
  Output o(a.out, out);
  *o << j.dump(2) << "\n";
  return kOk;
}

// ---- trend ----------------------------------------------------------------

struct TrendArgs {
  Common common;
  std::string data, out;
  std::size_t L = 100;
  double alpha = 0.1;
};

int cmd_trend(const TrendArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  if (cfg.n != 2) throw ConfigError("trend summarizes angles (n = 2)");
  const auto obs = load_series(a.data, cfg, a.common.degrees, err);
  ModelSpec spec = cfg.model_spec();
  if (!spec.F.is_constant()) spec.F = spec.F.prefix(obs.size());
  cfg.gibbs.store_paths = true;
  const PosteriorDraws post = run_gibbs(obs, spec, cfg.gibbs, cfg.theta);
  Rng rng = Rng(cfg.seed).substream(4);
  const auto path = trend_path(post, spec.F, a.L, a.alpha, rng);
  Output o(a.out, out);
  *o << "t,median,lower,upper\n";
  for (const auto& p : path) {
    *o << p.t << "," << format_number(out_angle(p.median, a.common.degrees)) << ","
       << format_number(out_angle(p.lower, a.common.degrees)) << ","
       << format_number(out_angle(p.upper, a.common.degrees)) << "\n";
  }
  return kOk;
}

// ---- geweke ---------------------------------------------------------------

struct GewekeArgs {
  std::size_t draws = 5000;
  std::size_t thin = 10;
  std::uint64_t seed = GewekeConfig{}.seed;
  bool general_sigma = false;
  bool null_run = false;
  std::vector<std::string> faults;
  std::string qq_dir;
  std::size_t qq_points = 99;
};

std::string file_safe(const std::string& name) {
  std::string s;
  for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  return s;
}

int cmd_geweke(const GewekeArgs& a, std::ostream& out) {
  GewekeConfig cfg;
  cfg.marginal_draws = cfg.successive_draws = a.draws;
  cfg.thin = a.thin;
  cfg.seed = a.seed;
  cfg.sigma_identity = !a.general_sigma;
  cfg.faults = parse_faults(a.faults);
  const GewekeReport rep = a.null_run ? geweke_null(cfg) : geweke_compare(cfg);
  json scalars = json::array();
  for (const auto& s : rep.scalars) scalars.push_back({{"name", s.name}, {"ks", s.ks_statistic}, {"p", s.p_value}});
  const json j = {{"comparison", a.null_run ? "null" : "marginal-vs-successive"},
                  {"draws", a.draws},
                  {"thin", a.thin},
                  {"pass_fraction", rep.pass_fraction},
                  {"min_p", rep.min_p},
                  {"passed", rep.passed},
                  {"scalars", scalars}};
  out << j.dump(2) << "\n";
  if (!a.qq_dir.empty()) {
    std::filesystem::create_directories(a.qq_dir);
    for (std::size_t k = 0; k < rep.scalars.size(); ++k) {
      std::ofstream f(std::filesystem::path(a.qq_dir) / (file_safe(rep.scalars[k].name) + ".csv"));
      if (!f) throw DataError("cannot write into " + a.qq_dir);
      f << "marginal,successive\n";
      for (std::size_t i = 1; i <= a.qq_points; ++i) {
        const double q = static_cast<double>(i) / static_cast<double>(a.qq_points + 1);
        f << format_number(stats::quantile_type7(rep.marginal[k], q)) << ","
          << format_number(stats::quantile_type7(rep.successive[k], q)) << "\n";
      }
    }
  }
  return kOk;
}

// ---- recover --------------------------------------------------------------

struct RecoverArgs {
  std::size_t replications = 10;
  std::size_t T_max = 800;
  bool long_run = false;
  std::optional<std::size_t> iterations, burn_in;
  std::uint64_t seed = RecoveryConfig{}.seed;
  int threads = 1;
  std::string out;
};

int cmd_recover(const RecoverArgs& a, std::ostream& out) {
  RecoveryConfig cfg;
  cfg.replications = a.replications;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.T_max = a.long_run ? 3200 : a.T_max;
  cfg.windows.clear();
  for (std::size_t w = 100; w <= cfg.T_max; w *= 2) cfg.windows.push_back(w);
  if (cfg.windows.empty() || cfg.windows.back() != cfg.T_max) cfg.windows.push_back(cfg.T_max);
  if (a.iterations) cfg.gibbs.iterations = *a.iterations;
  if (a.burn_in) cfg.gibbs.burn_in = *a.burn_in;
  cfg.gibbs.threads = a.threads;
  cfg.gibbs.validate();
  const RecoveryReport rep = parameter_recovery(cfg);
  json reps = json::array();
  for (const auto& r : rep.replications) {
    json els = json::array();
    for (const auto& e : r.elements) {
      els.push_back({{"name", e.name}, {"truth", e.truth}, {"sd", e.sd}, {"median", e.median},
                     {"lower", e.lower}, {"upper", e.upper}});
    }
    reps.push_back({{"seed", r.seed}, {"elements", els}});
  }
  const json j = {{"windows", rep.windows},
                  {"sd_decrease_fraction", rep.sd_decrease_fraction},
                  {"coverage_fraction", rep.coverage_fraction},
                  {"replications", reps}};
  Output o(a.out, out);
  *o << j.dump(2) << "\n";
  return kOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  Common common;
  std::size_t periods = 500;
  std::size_t repetitions = 7;
  std::size_t gibbs_every = 10;
  std::optional<std::size_t> gibbs_iterations, particles;
  std::string out;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const RunConfig rc = load_config(a.common);
  const Priors pr = rc.resolved_priors();
  const Design F = rc.build_design();
  ThetaDraw theta;
  if (rc.theta) {
    theta = *rc.theta;
  } else {
    SigmaStructured parts{Matrix::Identity(rc.n - 1, rc.n - 1), Vector::Zero(rc.n - 1)};
    theta = ThetaDraw::make(parts, 0.9 * Matrix::Identity(rc.p(), rc.p()), 0.1 * Matrix::Identity(rc.p(), rc.p()));
  }
  TimingConfig cfg;
  cfg.periods = a.periods;
  cfg.repetitions = a.repetitions;
  cfg.gibbs_every = a.gibbs_every;
  cfg.seed = rc.seed;
  cfg.swarm = rc.swarm;
  if (a.particles) cfg.swarm.M = *a.particles;
  if (a.gibbs_iterations) {
    cfg.gibbs.iterations = *a.gibbs_iterations;
    cfg.gibbs.burn_in = *a.gibbs_iterations / 6;
  }
  cfg.gibbs.threads = rc.threads;
  Rng rng = Rng(rc.seed).substream(5);
  const JointDraw series = simulate_series(theta, F, pr, a.periods, rng);
  const TimingReport rep = timing_benchmark(series.obs, theta, F, pr, cfg);
  if (!a.out.empty()) {
    Output o(a.out, out);
    *o << "method,t,seconds\n";
    for (std::size_t i = 0; i < rep.rbpf_t.size(); ++i)
      *o << "rbpf," << rep.rbpf_t[i] << "," << format_number(rep.rbpf_seconds[i]) << "\n";
    for (std::size_t i = 0; i < rep.gibbs_t.size(); ++i)
      *o << "gibbs," << rep.gibbs_t[i] << "," << format_number(rep.gibbs_seconds[i]) << "\n";
  }
  const json j = {{"rbpf", {{"slope", rep.rbpf_slope.slope}, {"se", rep.rbpf_slope.slope_se}, {"flat", rep.rbpf_flat}}},
                  {"gibbs",
                   {{"slope", rep.gibbs_slope.slope},
                    {"se", rep.gibbs_slope.slope_se},
                    {"increasing", rep.gibbs_increasing}}},
                  {"final_ks_p", rep.final_ks.p_value}};
  out << j.dump(2) << "\n";
  return kOk;
}

// ---- pn-density -----------------------------------------------------------

struct DensityArgs {
  std::vector<double> mu{1.0, 0.0};
  std::vector<double> sigma{1.0, 0.0, 1.0};
  std::size_t points = 360;
  bool degrees = false;
  std::string out;
};

int cmd_pn_density(const DensityArgs& a, std::ostream& out) {
  if (a.mu.size() != 2) throw ConfigError("--mu takes two values");
  if (a.sigma.size() != 3) throw ConfigError("--sigma takes s11,s12,s22");
  const Vector mu = Eigen::Map<const Vector>(a.mu.data(), 2);
  Matrix s(2, 2);
  s << a.sigma[0], a.sigma[1], a.sigma[1], a.sigma[2];
  Output o(a.out, out);
  *o << "angle,density\n";
  for (std::size_t i = 0; i < a.points; ++i) {
    const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(a.points);
    const double d = pn_density_angle(Angle(th), mu, s);
    *o << format_number(out_angle(th, a.degrees)) << "," << format_number(a.degrees ? d / kRadToDeg : d) << "\n";
  }
  return kOk;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projected dynamic linear models for directional time series"};
  app.name("pdlm");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "draw a synthetic series (theta from the config or its prior)");
  add_common(c_sim, sim.common);
  c_sim->add_option("-T,--periods", sim.T, "series length")->check(CLI::PositiveNumber);
  c_sim->add_option("-o,--out", sim.out, "output file (default stdout)");
  c_sim->add_option("--truth-out", sim.truth_out, "JSON file for theta, states and lengths");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Gibbs sampler; writes a draw store");
  add_common(c_fit, fit.common);
  c_fit->add_option("-d,--data", fit.data, "series file")->required()->check(CLI::ExistingFile);
  c_fit->add_option("-o,--out", fit.out, "draw store (default stdout)");
  c_fit->add_option("--format", fit.format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));
  c_fit->add_option("--iterations", fit.iterations)->check(CLI::PositiveNumber);
  c_fit->add_option("--burn-in", fit.burn_in);
  c_fit->add_option("--thin", fit.thin)->check(CLI::PositiveNumber);

  FilterArgs flt;
  auto* c_flt = app.add_subcommand("filter", "particle filter over a file or stdin; one JSON record per step");
  add_common(c_flt, flt.common);
  c_flt->add_option("-d,--data", flt.data, "series file, or - for stdin");
  c_flt->add_option("--alpha", flt.alphas, "interval levels for the predictive quantiles")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  c_flt->add_option("--predictive-draws", flt.predictive_draws)->check(CLI::PositiveNumber);
  c_flt->add_option("-M,--particles", flt.particles)->check(CLI::PositiveNumber);

  ForecastArgs fc;
  auto* c_fc = app.add_subcommand("forecast", "posterior predictive from a draw store");
  add_common(c_fc, fc.common);
  c_fc->add_option("--draws", fc.draws, "draw store from fit")->required()->check(CLI::ExistingFile);
  c_fc->add_option("--period", fc.period, "forecast target period (time-varying designs)");
  c_fc->add_option("-J,--n-draws", fc.n_draws)->check(CLI::PositiveNumber);
  c_fc->add_option("--alpha", fc.alpha)->check(CLI::Range(1e-9, 1.0 - 1e-9));
  c_fc->add_option("--samples-out", fc.samples_out, "write the predictive angles");
  c_fc->add_flag("--ignore-config-hash", fc.ignore_hash);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "rolling one-step-ahead forecasts and their scores");
  add_common(c_ev, ev.common);
  c_ev->add_option("-d,--data", ev.data, "series file")->required()->check(CLI::ExistingFile);
  c_ev->add_option("-o,--out", ev.out, "metrics JSON (default stdout)");
  c_ev->add_option("--t0", ev.t0, "first training length")->check(CLI::PositiveNumber);
  c_ev->add_option("--alpha", ev.alpha)->check(CLI::Range(1e-9, 1.0 - 1e-9));
  c_ev->add_option("--method", ev.method)->check(CLI::IsMember({"gibbs", "rbpf"}));
  c_ev->add_option("-J,--n-draws", ev.n_draws)->check(CLI::PositiveNumber);
  c_ev->add_option("--iterations", ev.iterations)->check(CLI::PositiveNumber);
  c_ev->add_option("--burn-in", ev.burn_in);

  TrendArgs tr;
  auto* c_tr = app.add_subcommand("trend", "posterior mean-direction path with credible bands");
  add_common(c_tr, tr.common);
  c_tr->add_option("-d,--data", tr.data, "series file")->required()->check(CLI::ExistingFile);
  c_tr->add_option("-o,--out", tr.out, "CSV output (default stdout)");
  c_tr->add_option("-L", tr.L, "Monte Carlo draws per mean direction")->check(CLI::PositiveNumber);
  c_tr->add_option("--alpha", tr.alpha)->check(CLI::Range(1e-9, 1.0 - 1e-9));

  GewekeArgs gw;
  auto* c_gw = app.add_subcommand("geweke", "joint-distribution test of the Gibbs sampler");
  c_gw->add_option("--draws", gw.draws, "draws per sampler")->check(CLI::PositiveNumber);
  c_gw->add_option("--thin", gw.thin)->check(CLI::PositiveNumber);
  c_gw->add_option("--seed", gw.seed);
  c_gw->add_flag("--general-sigma", gw.general_sigma, "draw Sigma from its prior as well");
  c_gw->add_flag("--null", gw.null_run, "compare the direct sampler with itself under two seeds");
  c_gw->add_option("--fault", gw.faults, "inject a known bug")
      ->check(CLI::IsMember({"skip-lengths", "wrong-dT", "transposed-G"}));
  c_gw->add_option("--qq-dir", gw.qq_dir, "directory for per-scalar Q-Q CSV files");

  RecoverArgs rc;
  auto* c_rc = app.add_subcommand("recover", "parameter recovery on synthetic data");
  c_rc->add_option("--replications", rc.replications)->check(CLI::PositiveNumber);
  c_rc->add_option("--t-max", rc.T_max)->check(CLI::Range(100, 1000000));
  c_rc->add_flag("--long-run", rc.long_run, "T_max = 3200");
  c_rc->add_option("--iterations", rc.iterations)->check(CLI::PositiveNumber);
  c_rc->add_option("--burn-in", rc.burn_in);
  c_rc->add_option("--seed", rc.seed);
  c_rc->add_option("--threads", rc.threads)->check(CLI::PositiveNumber);
  c_rc->add_option("-o,--out", rc.out);

  BenchArgs bn;
  auto* c_bn = app.add_subcommand("bench", "per-period cost of the filter against rerunning Gibbs");
  add_common(c_bn, bn.common);
  c_bn->add_option("--periods", bn.periods)->check(CLI::PositiveNumber);
  c_bn->add_option("--repetitions", bn.repetitions)->check(CLI::PositiveNumber);
  c_bn->add_option("--gibbs-every", bn.gibbs_every)->check(CLI::PositiveNumber);
  c_bn->add_option("--gibbs-iterations", bn.gibbs_iterations)->check(CLI::PositiveNumber);
  c_bn->add_option("-M,--particles", bn.particles)->check(CLI::PositiveNumber);
  c_bn->add_option("-o,--out", bn.out, "per-period timings CSV");

  DensityArgs dn;
  auto* c_dn = app.add_subcommand("pn-density", "projected normal density of an angle on a grid");
  c_dn->add_option("--mu", dn.mu, "mean vector x,y")->delimiter(',');
  c_dn->add_option("--sigma", dn.sigma, "covariance s11,s12,s22")->delimiter(',');
  c_dn->add_option("--points", dn.points)->check(CLI::PositiveNumber);
  c_dn->add_flag("--degrees", dn.degrees);
  c_dn->add_option("-o,--out", dn.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim, out);
    if (c_fit->parsed()) return cmd_fit(fit, out, err);
    if (c_flt->parsed()) return cmd_filter(flt, in, out, err);
    if (c_fc->parsed()) return cmd_forecast(fc, out);
    if (c_ev->parsed()) return cmd_evaluate(ev, out, err);
    if (c_tr->parsed()) return cmd_trend(tr, out, err);
    if (c_gw->parsed()) return cmd_geweke(gw, out);
    if (c_rc->parsed()) return cmd_recover(rc, out);
    if (c_bn->parsed()) return cmd_bench(bn, out);
    if (c_dn->parsed()) return cmd_pn_density(dn, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const DomainError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}

}  // namespace pdlm
