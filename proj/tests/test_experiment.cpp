#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "subcrit/error.hpp"
#include "subcrit/experiment.hpp"

using namespace subcrit;
using doctest::Approx;

namespace {

const char* const kModel = R"("model": {"lambda": 2, "mu": 5, "offspring": {"2": 0.6, "3": 0.1, "4": 0.3}})";

std::string config(const std::string& rest) { return std::string("{") + kModel + (rest.empty() ? "" : ", " + rest) + "}"; }

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::BadInput;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("subcrit_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = parse_config(config(R"("seed": 9, "threads": 2,
      "experiment": {"kind": "coverage", "z0": 3, "t_grid": [5, 10], "replications": 20, "level": 0.9},
      "sampler": {"kind": "splitting", "particles": 30, "level_spacing": 0.5},
      "output": {"dir": "somewhere", "format": "svg"})"));
  CHECK(cfg.seed == 9);
  CHECK(cfg.threads == 2);
  CHECK(cfg.kind == ExperimentKind::Coverage);
  CHECK(cfg.z0 == 3);
  CHECK(cfg.t_grid == std::vector<double>{5, 10});
  CHECK(cfg.replications == 20);
  CHECK(cfg.level == Approx(0.9));
  CHECK(cfg.sampler.kind == SamplerKind::Splitting);
  CHECK(cfg.sampler.particles == 30);
  CHECK(cfg.out_dir == "somewhere");
  CHECK(cfg.svg);
  CHECK(cfg.model.lambda() == 2);
}

TEST_CASE("config errors") {
  CHECK(kind_of("{") == ErrorKind::ConfigError);
  CHECK(kind_of("[]") == ErrorKind::ConfigError);
  CHECK(kind_of(R"({"seed": 1})") == ErrorKind::ConfigError);
  CHECK(kind_of(config(R"("experiment": {"kind": "nope"})")) == ErrorKind::ConfigError);
  CHECK(kind_of(config(R"("experiment": {"t_grid": []})")) == ErrorKind::ConfigError);
  CHECK(kind_of(config(R"("experiment": {"replications": 0})")) == ErrorKind::ConfigError);
  CHECK(kind_of(config(R"("experiment": {"z0": "five"})")) == ErrorKind::ConfigError);
  CHECK(kind_of(config(R"("sampler": {"kind": "magic"})")) == ErrorKind::ConfigError);
  CHECK(kind_of(config(R"("output": {"format": "pdf"})")) == ErrorKind::ConfigError);
  CHECK(kind_of(config(R"("experiment": {"kind": "bias_surface"})")) == ErrorKind::ConfigError);
  CHECK(kind_of(R"({"model": {"lambda": 1, "mu": 1, "offspring": {"2": 1}}})") == ErrorKind::NotSubcritical);
  CHECK(kind_of(R"({"model": {"lambda": 1, "mu": 3, "offspring": {"2": 0.5}}})") == ErrorKind::BadLaw);
  CHECK(kind_of(R"({"model": {"lambda": 1, "mu": 3, "offspring": {"two": 1}}})") == ErrorKind::ConfigError);
}

TEST_CASE("config hash ignores formatting and key order") {
  const auto a = parse_config(R"({"seed": 1, "model": {"lambda": 2, "mu": 5, "offspring": {"2": 1}}})");
  const auto b = parse_config("{ \"model\": {\"offspring\": {\"2\": 1}, \"mu\": 5, \"lambda\": 2},\n \"seed\": 1 }");
  const auto c = parse_config(R"({"seed": 2, "model": {"lambda": 2, "mu": 5, "offspring": {"2": 1}}})");
  CHECK(a.config_hash == b.config_hash);
  CHECK(a.config_hash != c.config_hash);
}

TEST_CASE("bias surface") {
  ExperimentConfig cfg = parse_config(R"({"model": {"lambda": 1, "mu": 3, "offspring": {"2": 1}},
      "experiment": {"kind": "bias_surface", "lambda_grid": [1, 2, 3], "mu_grid": [2, 3, 4, 6]}})");
  const auto rows = bias_surface(cfg);
  REQUIRE(rows.size() == 12);
  for (const auto& r : rows) {
    if (r.lambda >= r.mu) {
      CHECK_FALSE(r.subcritical);
      CHECK(std::isnan(r.lambda_rel));
      continue;
    }
    const double ratio = r.mu / r.lambda;
    CHECK(r.lambda_rel == Approx((ratio - 1) / (ratio + 1)).epsilon(1e-12));
    CHECK(r.mu_rel == Approx((ratio - 1) / (ratio + 1)).epsilon(1e-12));
    if (r.lambda == 1 && r.mu == 3) {
      CHECK(r.lambda_rel == Approx(0.5));
      CHECK(r.mu_rel == Approx(0.5));
    }
  }
  // increasing in μ/λ along each λ column
  for (std::size_t c = 0; c < 3; ++c) {
    double prev = -1;
    for (std::size_t r = 0; r < 4; ++r) {
      const auto& row = rows[r * 3 + c];
      if (!row.subcritical) continue;
      CHECK(row.lambda_rel > prev);
      prev = row.lambda_rel;
    }
  }
}

TEST_CASE("spectral checks pass at N = 400") {
  const ExperimentConfig cfg = parse_config(config(R"("experiment": {"kind": "spectral_check"})"));
  for (const auto& row : spectral_checks(cfg)) {
    INFO(row.check);
    CHECK(row.pass);
  }
}

TEST_CASE("replication outputs are reproducible and thread-independent") {
  ExperimentConfig cfg = parse_config(config(R"("seed": 4,
      "experiment": {"kind": "convergence", "z0": 5, "t_grid": [5, 10], "replications": 40, "skeleton_deltas": [0.5]})"));
  cfg.out_dir = scratch("conv_a");
  cfg.svg = true;
  const auto a = run_convergence(cfg);
  cfg.out_dir = scratch("conv_b");
  cfg.threads = 3;
  const auto b = run_convergence(cfg);
  CHECK(slurp(a) == slurp(b));
  CHECK(std::filesystem::exists(cfg.out_dir / "convergence_lambda.svg"));

  const std::string text = slurp(a);
  CHECK(text.rfind("# config_hash=", 0) == 0);
  CHECK(text.find("seed=4") != std::string::npos);
  CHECK(text.find("\nt,estimator,parameter,median,mean,mse,truth,limit,n,failed\n") != std::string::npos);
  CHECK(text.find("\n10,C_CONSISTENT,lambda,") != std::string::npos);
  CHECK(text.find("SKELETON@0.5,lambda") != std::string::npos);
}

TEST_CASE("replicate bookkeeping") {
  ExperimentConfig cfg = parse_config(config(R"("experiment": {"z0": 5, "replications": 30}, "sampler": {"kind": "rejection"})"));
  const ReplicateEstimates rep = run_replicates(cfg, 2.0, 0);
  CHECK(rep.successes + rep.failed_paths == 30);
  for (const auto& [key, values] : rep.value) CHECK(values.size() == rep.successes);
  CHECK(limit_for(cfg.model, "MLE_CLASSIC/lambda").value() == Approx(cfg.model.derived().lambda_up));
  CHECK(limit_for(cfg.model, "PK_HAT/p2").value() == Approx(cfg.model.derived().pk_up.at(2)));
  CHECK(truth_for(cfg.model, "PK_TILDE/p3").value() == Approx(0.1));
  CHECK_FALSE(truth_for(cfg.model, "X/unknown").has_value());

  const auto cov = coverage_of(cfg, {rep});
  CHECK_FALSE(cov.empty());
  for (const auto& row : cov) {
    CHECK(row.coverage >= 0);
    CHECK(row.coverage <= 1);
  }
}

TEST_CASE("failed replications are counted, not fatal") {
  ExperimentConfig cfg = parse_config(config(R"("experiment": {"z0": 1, "replications": 5},
      "sampler": {"kind": "splitting", "particles": 1, "level_spacing": 30})"));
  const ReplicateEstimates rep = run_replicates(cfg, 60.0, 0);
  CHECK(rep.failed_paths == 5);
  CHECK(rep.failure_log.size() == 5);
  CHECK(rep.successes == 0);
}

TEST_CASE("every experiment kind writes a CSV") {
  for (const char* kind : {"bias_surface", "mse", "coverage", "spectral_check", "single_run"}) {
    ExperimentConfig cfg = parse_config(config(std::string(R"("experiment": {"kind": ")") + kind +
                                               R"(", "t_grid": [5], "replications": 10, "lambda_grid": [1, 2], "mu_grid": [5, 8]},
        "spectral_n": 100)"));
    cfg.out_dir = scratch(kind);
    cfg.svg = true;
    const auto path = run_experiment(cfg);
    INFO(kind);
    CHECK(std::filesystem::exists(path));
    CHECK(slurp(path).rfind("# config_hash=", 0) == 0);
  }
}

}  // TEST_SUITE
