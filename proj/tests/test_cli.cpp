#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(SUBCRIT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "subcrit_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

const char* const kGood = R"({"seed": 3,
  "model": {"lambda": 2, "mu": 5, "offspring": {"2": 0.6, "3": 0.1, "4": 0.3}},
  "experiment": {"kind": "single_run", "z0": 5, "t_grid": [10]}})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("subcommands succeed") {
  const fs::path cfg = write_config("good.json", kGood);
  const fs::path out = fs::temp_directory_path() / "subcrit_cli_test" / "out";
  const std::string common = "--config " + cfg.string() + " --out " + out.string();
  CHECK(run("simulate " + common + " --t 2") == 0);
  CHECK(fs::exists(out / "simulate.csv"));
  CHECK(run("qprocess " + common + " --mode spine --t 2 --format svg") == 0);
  CHECK(fs::exists(out / "qprocess.svg"));
  CHECK(run("conditioned " + common + " --sampler exact") == 0);
  CHECK(run("estimate " + common + " --input " + (out / "conditioned.csv").string()) == 0);
  CHECK(fs::exists(out / "estimate.csv"));
  CHECK(run("spectral " + common + " --n 200 --z0 1 --tv-ell 1 5") == 0);
  CHECK(fs::exists(out / "spectral_tv.csv"));
  CHECK(run("experiment " + common + " --seed 8 --threads 2") == 0);
  CHECK(fs::exists(out / "single_run_estimates.csv"));
}

TEST_CASE("config errors exit with 2") {
  const fs::path bad = write_config("bad.json", R"({"model": {"lambda": 3, "mu": 1, "offspring": {"2": 1}}})");
  CHECK(run("experiment --config " + bad.string()) == 2);
  const fs::path broken = write_config("broken.json", "{ not json");
  CHECK(run("experiment --config " + broken.string()) == 2);
  const fs::path good = write_config("good.json", kGood);
  CHECK(run("experiment --config " + good.string() + " --format pdf") == 2);
  CHECK(run("experiment") == 2);
  CHECK(run("nonsense") == 2);
}

TEST_CASE("numerical failures exit with 3") {
  const fs::path cfg = write_config("hard.json", R"({"seed": 1,
    "model": {"lambda": 2, "mu": 5, "offspring": {"2": 0.6, "3": 0.1, "4": 0.3}},
    "experiment": {"z0": 1, "t_grid": [40]}, "sampler": {"kind": "rejection", "max_attempts": 3}})");
  CHECK(run("conditioned --config " + cfg.string() + " --out " + (fs::temp_directory_path() / "subcrit_cli_test").string()) == 3);
}

}  // TEST_SUITE
