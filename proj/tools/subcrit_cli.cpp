#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subcrit/conditioned.hpp"
#include "subcrit/error.hpp"
#include "subcrit/estimators.hpp"
#include "subcrit/experiment.hpp"
#include "subcrit/qprocess.hpp"
#include "subcrit/rng.hpp"
#include "subcrit/sim.hpp"
#include "subcrit/spectral.hpp"
#include "subcrit/svg.hpp"

using namespace subcrit;

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericExit = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::string> format;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "master seed (overrides config)");
  sub->add_option("--out", c.out, "output directory (overrides config)");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--format", c.format, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  if (c.threads) cfg.threads = *c.threads;
  if (c.format) cfg.svg = *c.format == "svg";
  cfg.check();
  return cfg;
}

std::filesystem::path output(const ExperimentConfig& cfg, const std::string& stem, std::ofstream& out) {
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = cfg.out_dir / (stem + ".csv");
  out.open(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
  out << csv_preamble(cfg);
  return path;
}

void plot_path(const ExperimentConfig& cfg, const std::string& stem, const Trajectory& traj, const std::string& title) {
  if (!cfg.svg) return;
  svg::Series s{"Z", {0.0}, {static_cast<double>(traj.z0)}};
  Count z = traj.z0;
  for (const auto& e : traj.events) {
    s.x.push_back(e.time);
    s.y.push_back(static_cast<double>(z));
    z = e.state_after();
    s.x.push_back(e.time);
    s.y.push_back(static_cast<double>(z));
  }
  s.x.push_back(traj.horizon);
  s.y.push_back(static_cast<double>(z));
  svg::write(cfg.out_dir / (stem + ".svg"), svg::render(svg::LinePlot{title, "time", "population", {s}, {}}));
}

void write_path(const ExperimentConfig& cfg, const std::string& stem, const Trajectory& traj, const std::string& title) {
  std::ofstream out;
  const auto path = output(cfg, stem, out);
  write_trajectory_csv(out, traj);
  plot_path(cfg, stem, traj, title);
  std::cout << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subcritical birth-and-death processes: simulation, conditioning and inference"};
  app.require_subcommand(1);

  Common common;
  std::optional<Count> z0;
  std::optional<double> horizon;

  auto* sim = app.add_subcommand("simulate", "Simulate the unconditioned process");
  add_common(sim, common);
  sim->add_option("--z0", z0, "initial population");
  sim->add_option("--t", horizon, "horizon (default: last t_grid value)");

  std::string qmode = "generator";
  auto* qp = app.add_subcommand("qprocess", "Simulate the Q-process");
  add_common(qp, common);
  qp->add_option("--z0", z0, "initial population");
  qp->add_option("--t", horizon, "horizon");
  qp->add_option("--mode", qmode, "generator, spine or immigration")
      ->check(CLI::IsMember({"generator", "spine", "immigration"}));

  std::optional<std::string> sampler;
  auto* cond = app.add_subcommand("conditioned", "Sample a path conditioned on survival to t");
  add_common(cond, common);
  cond->add_option("--z0", z0, "initial population");
  cond->add_option("--t", horizon, "horizon");
  cond->add_option("--sampler", sampler, "exact, rejection or splitting")
      ->check(CLI::IsMember({"exact", "rejection", "splitting"}));

  std::string input;
  auto* est = app.add_subcommand("estimate", "Run every estimator on a trajectory CSV");
  add_common(est, common);
  est->add_option("--input", input, "trajectory CSV")->required()->check(CLI::ExistingFile);
  est->add_option("--t", horizon, "observation horizon (default: the trajectory's)");

  std::optional<std::size_t> truncation;
  std::vector<double> tv_ells;
  auto* spec = app.add_subcommand("spectral", "Perron triple, QSD and conditioned-vs-Q-process TV decay");
  add_common(spec, common);
  spec->add_option("--n", truncation, "truncation level");
  spec->add_option("--z0", z0, "initial state for the TV decay");
  spec->add_option("--t", horizon, "horizon for the TV decay");
  spec->add_option("--tv-ell", tv_ells, "headroom values t-u for the TV decay");

  auto* exp = app.add_subcommand("experiment", "Run the experiment described by the config");
  add_common(exp, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    ExperimentConfig cfg = resolve(common);
    if (z0) cfg.z0 = *z0;
    if (horizon) cfg.t_grid = {*horizon};
    cfg.check();
    const double t = cfg.t_grid.back();

    if (*sim) {
      write_path(cfg, "simulate", simulate(cfg.model, cfg.z0, t, derive_seed(cfg.seed, 0)), "Unconditioned path");
    } else if (*qp) {
      Rng rng(derive_seed(cfg.seed, 0));
      Trajectory traj;
      if (qmode == "generator") {
        traj = simulate_generator(cfg.model, cfg.z0, t, rng);
      } else if (qmode == "spine") {
        traj = simulate_spine(cfg.model, t, rng, cfg.z0).path;
      } else {
        traj = simulate_immigration(cfg.model, cfg.z0, t, rng);
      }
      write_path(cfg, "qprocess", traj, "Q-process path (" + qmode + ")");
    } else if (*cond) {
      if (sampler) {
        cfg.sampler.kind = *sampler == "exact"       ? SamplerKind::Exact
                           : *sampler == "rejection" ? SamplerKind::Rejection
                                                     : SamplerKind::Splitting;
      }
      Rng rng(derive_seed(cfg.seed, 0));
      Trajectory traj;
      switch (cfg.sampler.kind) {
        case SamplerKind::Exact:
          traj = simulate_conditioned_exact(ExtinctionCurve(cfg.model, t, 1e-10), cfg.z0, t, rng);
          break;
        case SamplerKind::Rejection: {
          auto r = simulate_conditioned_rejection(cfg.model, cfg.z0, t, rng, cfg.sampler.max_attempts);
          std::cerr << "accepted after " << r.attempts << " attempts\n";
          traj = std::move(r.path);
          break;
        }
        case SamplerKind::Splitting: {
          auto r = simulate_conditioned_splitting(
              cfg.model, cfg.z0, t,
              SplittingConfig::equally_spaced(t, cfg.sampler.level_spacing, cfg.sampler.particles), rng);
          std::cerr << "survival estimate " << r.survival_estimate << "\n";
          traj = std::move(r.path);
          break;
        }
      }
      write_path(cfg, "conditioned", traj, "Path conditioned on survival");
    } else if (*est) {
      std::ifstream in(input, std::ios::binary);
      const Trajectory traj = read_trajectory_csv(in);
      const double obs = horizon ? *horizon : traj.horizon;
      std::vector<std::string> failures;
      const auto reports = estimate_all(traj, obs, estimate_options(cfg), &failures);
      for (const auto& f : failures) std::cerr << "estimator skipped: " << f << "\n";
      std::ofstream out;
      const auto path = output(cfg, "estimate", out);
      write_report_csv_header(out);
      for (const auto& r : reports) write_report_csv(out, r);
      std::cout << path.string() << "\n";
    } else if (*spec) {
      const TruncatedGenerator gen = build(cfg.model, truncation.value_or(cfg.spectral_n));
      const SpectralTriple triple = pf_triple(gen, cfg.spectral_tol);
      const Eigen::VectorXd stationary = triple.qprocess_stationary();
      std::ofstream out;
      const auto path = output(cfg, "spectral", out);
      char buf[128];
      std::snprintf(buf, sizeof buf, "# rho_star=%.15g stationary_mean=%.15g iterations=%zu\n", triple.rho_star,
                    triple.stationary_mean(), triple.iterations);
      out << buf << "j,qsd,right_vector,qprocess_stationary\n";
      for (Eigen::Index j = 0; j < triple.u.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%td,%.15g,%.15g,%.15g\n", j + 1, triple.u[j], triple.v[j], stationary[j]);
        out << buf;
      }
      std::cout << path.string() << "\n";
      if (!tv_ells.empty()) {
        const auto rows = tv_decay(gen, static_cast<std::size_t>(cfg.z0), t, tv_ells);
        std::ofstream tv;
        const auto tv_path = output(cfg, "spectral_tv", tv);
        tv << "ell,tv\n";
        svg::Series s{"TV", {}, {}};
        for (const auto& r : rows) {
          std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", r.ell, r.tv);
          tv << buf;
          s.x.push_back(r.ell);
          s.y.push_back(r.tv > 0 ? std::log10(r.tv) : std::nan(""));
        }
        if (cfg.svg) {
          svg::write(cfg.out_dir / "spectral_tv.svg",
                     svg::render(svg::LinePlot{"TV distance, conditioned vs Q-process", "headroom t-u",
                                               "log10 TV", {s}, {}}));
        }
        std::cout << tv_path.string() << "\n";
      }
    } else if (*exp) {
      std::cout << run_experiment(cfg).string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_input_error(e.kind()) ? kConfigExit : kNumericExit;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericExit;
  }
  return 0;
}
