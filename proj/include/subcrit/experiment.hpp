#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "subcrit/conditioned.hpp"
#include "subcrit/estimators.hpp"
#include "subcrit/model.hpp"

namespace subcrit {

enum class SamplerKind { Exact, Splitting, Rejection };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::Exact;
  double level_spacing = 1.0;
  std::size_t particles = 100;
  std::size_t max_attempts = 1000000;
};

enum class ExperimentKind { BiasSurface, Convergence, Mse, Coverage, SpectralCheck, SingleRun };

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(SamplerKind kind);

struct ExperimentConfig {
  ModelParams model = reference_model();
  std::uint64_t seed = 1;
  ExperimentKind kind = ExperimentKind::SingleRun;
  Count z0 = 5;
  std::vector<double> t_grid{75};
  std::size_t replications = 1500;
  std::vector<double> lambda_grid;
  std::vector<double> mu_grid;
  std::vector<double> skeleton_deltas;
  double level = 0.95;
  /// Use the true λ in p̃_k (otherwise the plug-in λ̃).
  bool known_lambda = true;
  SamplerConfig sampler;
  std::size_t spectral_n = 400;
  double spectral_tol = 1e-10;
  std::filesystem::path out_dir = "out";
  bool svg = false;
  unsigned threads = 1;
  /// Stable hash of the canonical config text, recorded in every CSV.
  std::uint64_t config_hash = 0;

  /// Throws Error{ConfigError} when a grid is empty, replications < 1, etc.
  void check() const;
};

/// Parses the JSON config tree:
///   {
///     "model":      {"lambda": 2, "mu": 5, "offspring": {"2": 0.6, "3": 0.1, "4": 0.3}},
///     "seed":       42,
///     "experiment": {"kind": "convergence", "z0": 5, "t_grid": [5, 75],
///                    "replications": 1500, "lambda_grid": [...], "mu_grid": [...],
///                    "skeleton_deltas": [0.5], "level": 0.95, "known_lambda": true,
///                    "spectral_n": 400, "spectral_tol": 1e-10},
///     "sampler":    {"kind": "exact|splitting|rejection", "particles": 100,
///                    "level_spacing": 1.0, "max_attempts": 1000000},
///     "output":     {"dir": "out", "format": "csv|svg"},
///     "threads":    1
///   }
/// Every key except model is optional. Model errors keep their own kind
/// (NotSubcritical, BadLaw, NonPositiveRate); everything else throws
/// Error{ConfigError}.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Options for estimate_all derived from the config.
EstimateOptions estimate_options(const ExperimentConfig& cfg);

/// Per-replication estimates at one horizon. Keys are
/// "<ESTIMATOR_ID>/<parameter>" (skeleton keys carry "@<delta>").
/// Entries are NaN where an estimator was undefined on that path.
struct ReplicateEstimates {
  double t = 0;
  std::map<std::string, std::vector<double>> value;
  std::map<std::string, std::vector<double>> lower;
  std::map<std::string, std::vector<double>> upper;
  std::size_t successes = 0;
  std::size_t failed_paths = 0;
  std::vector<std::string> failure_log;
};

/// Samples cfg.replications conditioned paths of horizon t with the
/// configured sampler and runs every estimator on each. Replication r at
/// grid index g uses stream derive_seed(derive_seed(seed, g), r).
ReplicateEstimates run_replicates(const ExperimentConfig& cfg, double t, std::size_t grid_index);

/// True model value of the parameter named by a key (λ, μ, m, σ² or p_k).
std::optional<double> truth_for(const ModelParams& params, const std::string& key);
/// Value the estimator converges to under survival conditioning: λ↑, μ↑,
/// p_k↑ for the classical estimators, the true value otherwise.
std::optional<double> limit_for(const ModelParams& params, const std::string& key);

struct SummaryRow {
  double t = 0;
  std::string key;
  double median = 0;
  double mean = 0;
  double mse = 0;  ///< mean squared error against truth_for(key)
  double truth = 0;
  double limit = 0;
  std::size_t n = 0;
  std::size_t failed = 0;
};

struct CoverageRow {
  double t = 0;
  std::string key;
  double coverage = 0;
  double mean_width = 0;
  std::size_t n = 0;
};

struct BiasRow {
  double lambda = 0;
  double mu = 0;
  bool subcritical = false;
  double lambda_bias = 0;  ///< λ↑ - λ
  double mu_bias = 0;      ///< μ - μ↑
  double lambda_rel = 0;
  double mu_rel = 0;
};

struct CheckRow {
  std::string check;
  double value = 0;
  double target = 0;
  double residual = 0;
  double tolerance = 0;
  bool pass = false;
};

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg, const std::vector<ReplicateEstimates>& reps);
std::vector<CoverageRow> coverage_of(const ExperimentConfig& cfg, const std::vector<ReplicateEstimates>& reps);

/// Closed-form bias of the classical MLEs over the (λ, μ) grid; pairs with
/// ρ >= 0 are flagged and left uncomputed.
std::vector<BiasRow> bias_surface(const ExperimentConfig& cfg);
std::vector<CheckRow> spectral_checks(const ExperimentConfig& cfg);

/// Writers; each CSV starts with "# config_hash=<hex> seed=<seed> kind=<kind>".
std::filesystem::path run_bias_surface(const ExperimentConfig& cfg);
std::filesystem::path run_convergence(const ExperimentConfig& cfg);
std::filesystem::path run_mse(const ExperimentConfig& cfg);
std::filesystem::path run_coverage(const ExperimentConfig& cfg);
std::filesystem::path run_spectral_check(const ExperimentConfig& cfg);
std::filesystem::path run_single(const ExperimentConfig& cfg);

/// Dispatches on cfg.kind.
std::filesystem::path run_experiment(const ExperimentConfig& cfg);

/// "# config_hash=<hex> seed=<seed> kind=<kind>\n"
std::string csv_preamble(const ExperimentConfig& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text) noexcept;

}  // namespace subcrit
