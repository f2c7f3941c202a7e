#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pdlm/cli.hpp"
#include "pdlm/errors.hpp"
#include "pdlm/io.hpp"

using namespace pdlm;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "pdlm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run_command(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pdlm_unit";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

PosteriorDraws sample_store(bool with_s_T) {
  PosteriorDraws d;
  d.n = 2;
  d.p = 2;
  d.seed = 17;
  for (int i = 0; i < 4; ++i) {
    SigmaStructured parts;
    parts.Gamma = Matrix::Constant(1, 1, 0.1 + i / 3.0);
    parts.gamma = Vector::Constant(1, -0.2 * i);
    Matrix G(2, 2);
    G << 0.9, 1.0 / 3.0, -0.1, std::nextafter(0.5, 1.0);
    ThetaDraw th = ThetaDraw::make(parts, G, Matrix::Identity(2, 2) * (1.0 + 1e-17 + i * 0.7));
    d.theta.push_back(th);
    d.iteration.push_back(10 + 2 * i);
    if (with_s_T) d.s_T.push_back(Eigen::Vector2d(std::sqrt(2.0) * i, -1e-300));
  }
  return d;
}

void check_same(const PosteriorDraws& a, const PosteriorDraws& b) {
  REQUIRE(a.size() == b.size());
  CHECK(a.n == b.n);
  CHECK(a.p == b.p);
  CHECK(a.s_T.size() == b.s_T.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.iteration[i] == b.iteration[i]);
    CHECK(a.theta[i].G == b.theta[i].G);
    CHECK(a.theta[i].W == b.theta[i].W);
    CHECK(a.theta[i].Sigma == b.theta[i].Sigma);
    CHECK(a.theta[i].sigma_parts.gamma == b.theta[i].sigma_parts.gamma);
    if (!a.s_T.empty()) CHECK(a.s_T[i] == b.s_T[i]);
  }
}

}  // namespace

TEST_CASE("ingest: angles, degrees and vectors") {
  std::istringstream deg("# comment\n90\n");
  const Ingested a = ingest_series(deg, IngestOptions{true});
  REQUIRE(a.obs.size() == 1);
  CHECK(std::abs(a.obs[0][0]) < 1e-15);
  CHECK(a.obs[0][1] == doctest::Approx(1.0));

  std::istringstream vec("0.6,0.8\n");
  const Ingested v = ingest_series(vec);
  CHECK(v.warnings.empty());
  CHECK(v.obs[0][0] == doctest::Approx(0.6));

  std::istringstream off("0.6,0.9\n");
  const Ingested w = ingest_series(off);
  REQUIRE(w.warnings.size() == 1);
  CHECK(w.warnings[0].find("1.0816") != std::string::npos);
  CHECK(w.obs[0].vector().norm() == doctest::Approx(1.0));
}

TEST_CASE("ingest: errors carry line numbers") {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      ingest_series(in);
    } catch (const DataError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("0.1\n0.2\nabc\n") == 3);
  CHECK(line_of("0.1\n\n0.3\n") == 2);
  CHECK(line_of("1,0\n0,1,0\n") == 2);
  CHECK(line_of("0.1\nnan\n") == 2);
  CHECK(line_of("0,0\n") == 1);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(ingest_series(empty), DataError);
}

TEST_CASE("streamed record parsing") {
  CHECK_FALSE(parse_observation("# c", 2, {}, 1));
  CHECK_FALSE(parse_observation("   ", 2, {}, 1));
  const auto u = parse_observation("3.14159", 2, {}, 1);
  REQUIRE(u);
  CHECK((*u)[0] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(parse_observation("1,0", 3, {}, 4), DataError);
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, std::nextafter(1.0, 2.0)}) {
    CHECK(std::stod(format_number(x)) == x);
  }
}

TEST_CASE("draw store round-trips exactly") {
  for (bool with_s_T : {false, true}) {
    const PosteriorDraws d = sample_store(with_s_T);
    DrawMetadata meta{17, 0xABCDEF0123456789ULL};

    std::stringstream csv;
    write_draws_csv(csv, d, meta);
    DrawMetadata m1;
    check_same(d, read_draws_csv(csv, &m1));
    CHECK(m1.seed == meta.seed);
    CHECK(m1.config_hash == meta.config_hash);

    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_draws_binary(bin, d, meta);
    DrawMetadata m2;
    check_same(d, read_draws_binary(bin, &m2));
    CHECK(m2.config_hash == meta.config_hash);

    const fs::path p = scratch(with_s_T ? "store_a.bin" : "store_b.csv");
    {
      std::ofstream f(p, std::ios::binary);
      if (with_s_T) write_draws_binary(f, d, meta);
      else write_draws_csv(f, d, meta);
    }
    check_same(d, read_draws(p.string()));
  }
  std::istringstream junk("not a store\n");
  CHECK_THROWS_AS(read_draws_csv(junk), DataError);
}

TEST_CASE("config parsing") {
  const RunConfig c = RunConfig::from_json(nlohmann::json::parse(R"({
    "n": 2, "seed": 9, "threads": 2,
    "gibbs": {"iterations": 300, "burn_in": 50},
    "rbpf": {"M": 64, "L": 3},
    "fixed": ["Sigma"],
    "theta": {"G": 0.9, "W": 0.1, "Sigma": 1.0}
  })"));
  CHECK(c.p() == 2);
  CHECK(c.gibbs.iterations == 300);
  CHECK(c.gibbs.seed == 9);
  CHECK(c.swarm.M == 64);
  CHECK(c.swarm.threads == 2);
  CHECK(c.fixed.sigma_fixed());
  CHECK_FALSE(c.fixed.G);
  REQUIRE(c.theta);
  CHECK(c.theta->G.isApprox(0.9 * Matrix::Identity(2, 2)));

  RunConfig other = c;
  other.seed = 1234;
  other.gibbs.iterations = 7;
  CHECK(other.hash() == c.hash());
  other.truncate = false;
  CHECK(other.hash() != c.hash());

  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"design": "bogus"})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"fixed": ["G"]})")).validate(), ConfigError);
  CHECK_THROWS_AS(
      RunConfig::from_json(nlohmann::json::parse(R"({"theta": {"Sigma": [[1, 0], [0, 2]]}})")), ConfigError);
}

TEST_CASE("cli: exit codes") {
  CHECK(run({}).code == kUsage);
  CHECK(run({"nonsense"}).code == kUsage);
  CHECK(run({"--help"}).code == kOk);
  CHECK(run({"fit"}).code == kUsage);

  const fs::path bad = scratch("bad.csv");
  write_file(bad, "0.1\nfoo\n");
  const CliResult r = run({"fit", "-d", bad.string(), "--iterations", "10", "--burn-in", "0"});
  CHECK(r.code == kData);
  CHECK(r.err.find("line 2") != std::string::npos);

  const fs::path cfg = scratch("bad.json");
  write_file(cfg, "{ not json");
  CHECK(run({"simulate", "-c", cfg.string()}).code == kUsage);
}

TEST_CASE("cli: simulate is deterministic per seed") {
  const auto a = run({"simulate", "-T", "20", "--seed", "5"});
  const auto b = run({"simulate", "-T", "20", "--seed", "5"});
  const auto c = run({"simulate", "-T", "20", "--seed", "6"});
  REQUIRE(a.code == kOk);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  std::istringstream in(a.out);
  CHECK(ingest_series(in).obs.size() == 20);
}

TEST_CASE("cli: fit then forecast") {
  const fs::path data = scratch("series.csv");
  write_file(data, run({"simulate", "-T", "30", "--seed", "3"}).out);
  const fs::path store = scratch("draws.bin");
  const auto f = run({"fit", "-d", data.string(), "-o", store.string(), "--format", "binary", "--iterations", "200",
                      "--burn-in", "50", "--seed", "4"});
  REQUIRE(f.code == kOk);
  const auto fc = run({"forecast", "--draws", store.string(), "-J", "500"});
  REQUIRE(fc.code == kOk);
  const auto j = nlohmann::json::parse(fc.out);
  CHECK(j.contains("median"));

  // A config with a different model part does not match the store.
  const fs::path cfg = scratch("other.json");
  write_file(cfg, R"({"truncate": false})");
  CHECK(run({"forecast", "-c", cfg.string(), "--draws", store.string()}).code == kData);
  CHECK(run({"forecast", "-c", cfg.string(), "--draws", store.string(), "--ignore-config-hash"}).code == kOk);
}

TEST_CASE("cli: filter streams one record per observation") {
  const std::string series = run({"simulate", "-T", "8", "--seed", "2"}).out;
  const fs::path cfg = scratch("theta.json");
  write_file(cfg, R"({"theta": {"G": 0.9, "W": 0.1, "Sigma": 1.0}})");
  const auto r = run({"filter", "-c", cfg.string(), "-M", "100", "--predictive-draws", "200", "--alpha", "0.1"}, series);
  REQUIRE(r.code == kOk);
  std::istringstream lines(r.out);
  std::string line;
  std::size_t t = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["t"].get<std::size_t>() == ++t);
    CHECK(j["ess"].get<double>() >= 1.0);
    CHECK(j["quantiles"].contains("0.5"));
  }
  CHECK(t == 8);
}

TEST_CASE("cli: evaluate never trains on its target") {
  // Changing observations after the last target leaves earlier forecasts alone,
  // and changing the target itself leaves its own forecast alone.
  const std::string series = run({"simulate", "-T", "14", "--seed", "8"}).out;
  std::vector<std::string> rows;
  std::istringstream in(series);
  for (std::string l; std::getline(in, l);) rows.push_back(l);
  auto with_row = [&](std::size_t i, const std::string& v) {
    auto copy = rows;
    copy[i] = v;
    std::string s;
    for (const auto& l : copy) s += l + "\n";
    return s;
  };
  const fs::path d1 = scratch("ev1.csv"), d2 = scratch("ev2.csv");
  write_file(d1, series);
  write_file(d2, with_row(13, "3.0"));
  const fs::path cfg = scratch("theta_ev.json");
  write_file(cfg, R"({"theta": {"G": 0.9, "W": 0.1, "Sigma": 1.0}})");
  for (const char* method : {"rbpf", "gibbs"}) {
    const std::vector<std::string> common{"-c", cfg.string(),"--t0", "10", "--method", method, "-J", "300", "--iterations", "150",
                                          "--burn-in", "30", "--seed", "1"};
    auto args1 = std::vector<std::string>{"evaluate", "-d", d1.string()};
    auto args2 = std::vector<std::string>{"evaluate", "-d", d2.string()};
    args1.insert(args1.end(), common.begin(), common.end());
    args2.insert(args2.end(), common.begin(), common.end());
    const auto a = run(args1), b = run(args2);
    REQUIRE(a.code == kOk);
    REQUIRE(b.code == kOk);
    const auto ja = nlohmann::json::parse(a.out), jb = nlohmann::json::parse(b.out);
    CHECK(ja["point"] == jb["point"]);
    CHECK(ja["lower"] == jb["lower"]);
    CHECK(ja["realizations"] != jb["realizations"]);
  }
}

TEST_CASE("cli: pn-density integrates to one") {
  const auto r = run({"pn-density", "--mu", "1,0.5", "--sigma", "1,0.2,0.5", "--points", "720"});
  REQUIRE(r.code == kOk);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);  // header
  double sum = 0;
  int n = 0;
  while (std::getline(in, line)) {
    sum += std::stod(line.substr(line.find(',') + 1));
    ++n;
  }
  CHECK(n == 720);
  CHECK(sum * 2 * std::numbers::pi / n == doctest::Approx(1.0).epsilon(1e-6));
}

#ifdef PDLM_CLI_PATH
TEST_CASE("cli binary runs") {
  const std::string cmd = std::string(PDLM_CLI_PATH) + " simulate -T 3 --seed 1 > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  const std::string bad = std::string(PDLM_CLI_PATH) + " fit -d /nonexistent 2> /dev/null";
  CHECK(WEXITSTATUS(std::system(bad.c_str())) == kUsage);
}
#endif
