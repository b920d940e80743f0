#include "subcrit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "subcrit/error.hpp"
#include "subcrit/parallel.hpp"
#include "subcrit/rng.hpp"
#include "subcrit/spectral.hpp"
#include "subcrit/summary.hpp"
#include "subcrit/svg.hpp"

namespace subcrit {

namespace {

using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

std::string fmt(double x) {
  if (std::isnan(x)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string hex(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

template <typename T>
T get_or(const json& node, const char* key, T fallback) {
  if (!node.contains(key)) return fallback;
  try {
    return node.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("bad value for '") + key + "': " + e.what());
  }
}

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) config_error(std::string("section '") + name + "' must be an object");
  return s;
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "bias_surface") return ExperimentKind::BiasSurface;
  if (s == "convergence") return ExperimentKind::Convergence;
  if (s == "mse") return ExperimentKind::Mse;
  if (s == "coverage") return ExperimentKind::Coverage;
  if (s == "spectral_check") return ExperimentKind::SpectralCheck;
  if (s == "single_run") return ExperimentKind::SingleRun;
  config_error("unknown experiment kind '" + s + "'");
}

SamplerKind parse_sampler(const std::string& s) {
  if (s == "exact") return SamplerKind::Exact;
  if (s == "splitting") return SamplerKind::Splitting;
  if (s == "rejection") return SamplerKind::Rejection;
  config_error("unknown sampler '" + s + "'");
}

ModelParams parse_model(const json& root) {
  if (!root.contains("model")) config_error("missing 'model' section");
  const json& m = section(root, "model");
  if (!m.contains("lambda") || !m.contains("mu") || !m.contains("offspring")) {
    config_error("model needs lambda, mu and offspring");
  }
  const auto lambda = get_or<double>(m, "lambda", 0);
  const auto mu = get_or<double>(m, "mu", 0);
  const json& off = m.at("offspring");
  if (!off.is_object()) config_error("offspring must map sizes to probabilities");
  std::map<int, double> probs;
  for (const auto& [key, value] : off.items()) {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size()) config_error("offspring size '" + key + "' is not an integer");
    if (!value.is_number()) config_error("offspring probability for " + key + " is not a number");
    probs[k] = value.get<double>();
  }
  return ModelParams(lambda, mu, OffspringLaw(probs));
}

// --- replication bookkeeping ----------------------------------------------

struct Entry {
  std::string key;
  double value = kNaN;
  double lower = kNaN;
  double upper = kNaN;
};

struct Replicate {
  bool ok = false;
  std::string failure;
  std::vector<Entry> entries;
};

std::vector<Entry> flatten(const std::vector<EstimateReport>& reports, const std::vector<double>& deltas) {
  std::vector<Entry> out;
  std::size_t skeleton_index = 0;
  for (const auto& r : reports) {
    std::string prefix(to_string(r.id));
    if (r.id == EstimatorId::Skeleton) {
      // Skeleton reports come in the order of the configured deltas; a failed
      // delta is skipped, so match on the recorded diagnostic when present.
      double delta = kNaN;
      if (auto it = r.diagnostics.find("delta"); it != r.diagnostics.end()) {
        delta = it->second;
      } else if (skeleton_index < deltas.size()) {
        delta = deltas[skeleton_index];
      }
      ++skeleton_index;
      prefix += "@" + fmt(delta);
    }
    for (const auto& e : r.estimates) {
      out.push_back({prefix + "/" + e.name, e.value.value_or(kNaN), e.lower.value_or(kNaN), e.upper.value_or(kNaN)});
    }
  }
  return out;
}

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto slash = key.find('/');
  return {key.substr(0, slash), slash == std::string::npos ? std::string() : key.substr(slash + 1)};
}

std::vector<double> finite(const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

std::filesystem::path prepare(const ExperimentConfig& cfg, const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) config_error("cannot create output directory " + cfg.out_dir.string() + ": " + ec.message());
  return cfg.out_dir / (stem + ".csv");
}

std::ofstream open_csv(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) config_error("cannot write " + path.string());
  out << csv_preamble(cfg);
  return out;
}

void report_failures(const std::vector<ReplicateEstimates>& reps) {
  for (const auto& r : reps) {
    for (const auto& line : r.failure_log) std::cerr << "t=" << fmt(r.t) << " " << line << "\n";
    if (r.failed_paths > 0) {
      std::cerr << "t=" << fmt(r.t) << ": " << r.failed_paths << " failed replications excluded\n";
    }
  }
}

std::vector<ReplicateEstimates> run_grid(const ExperimentConfig& cfg) {
  std::vector<ReplicateEstimates> reps;
  reps.reserve(cfg.t_grid.size());
  for (std::size_t g = 0; g < cfg.t_grid.size(); ++g) reps.push_back(run_replicates(cfg, cfg.t_grid[g], g));
  report_failures(reps);
  return reps;
}

std::string parameter_label(const std::string& p) {
  if (p == "lambda") return "birth rate";
  if (p == "mu") return "death rate";
  return p;
}

// One plot per parameter: `metric` of every estimator against t.
void plot_by_parameter(const ExperimentConfig& cfg, const std::vector<SummaryRow>& rows, const std::string& stem,
                       bool mse) {
  std::map<std::string, std::map<std::string, svg::Series>> by_param;
  std::map<std::string, std::pair<double, double>> refs;
  for (const auto& row : rows) {
    const auto [est, param] = split_key(row.key);
    auto& s = by_param[param][est];
    s.name = est;
    s.x.push_back(row.t);
    s.y.push_back(mse ? row.mse : row.median);
    auto& ref = refs.try_emplace(param, row.truth, row.truth).first->second;
    if (row.limit != row.truth) ref.second = row.limit;
  }
  for (auto& [param, series] : by_param) {
    svg::LinePlot plot;
    plot.title = (mse ? "MSE, " : "Median estimate, ") + parameter_label(param);
    plot.x_label = "observation horizon t";
    plot.y_label = mse ? "mean squared error" : "median";
    for (auto& [name, s] : series) plot.series.push_back(std::move(s));
    if (!mse) {
      plot.references.emplace_back("true", refs[param].first);
      if (refs[param].second != refs[param].first) plot.references.emplace_back("Q-limit", refs[param].second);
    }
    svg::write(cfg.out_dir / (stem + "_" + param + ".svg"), svg::render(plot));
  }
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::BiasSurface: return "bias_surface";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::Mse: return "mse";
    case ExperimentKind::Coverage: return "coverage";
    case ExperimentKind::SpectralCheck: return "spectral_check";
    case ExperimentKind::SingleRun: return "single_run";
  }
  return "unknown";
}

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Exact: return "exact";
    case SamplerKind::Splitting: return "splitting";
    case SamplerKind::Rejection: return "rejection";
  }
  return "unknown";
}

std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string csv_preamble(const ExperimentConfig& cfg) {
  return "# config_hash=" + hex(cfg.config_hash) + " seed=" + std::to_string(cfg.seed) +
         " kind=" + std::string(to_string(cfg.kind)) + "\n";
}

void ExperimentConfig::check() const {
  if (t_grid.empty()) config_error("t_grid is empty");
  for (double t : t_grid)
    if (!(t > 0 && std::isfinite(t))) config_error("t_grid values must be positive");
  if (replications < 1) config_error("replications must be >= 1");
  if (z0 < 1) config_error("z0 must be >= 1");
  if (!(level > 0 && level < 1)) config_error("level must lie in (0, 1)");
  if (kind == ExperimentKind::BiasSurface && (lambda_grid.empty() || mu_grid.empty())) {
    config_error("bias_surface needs nonempty lambda_grid and mu_grid");
  }
  for (double d : skeleton_deltas)
    if (!(d > 0)) config_error("skeleton deltas must be positive");
  if (sampler.particles < 1) config_error("sampler.particles must be >= 1");
  if (!(sampler.level_spacing > 0)) config_error("sampler.level_spacing must be positive");
  if (sampler.max_attempts < 1) config_error("sampler.max_attempts must be >= 1");
  if (threads < 1) config_error("threads must be >= 1");
}

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) config_error("config root must be an object");

  ExperimentConfig cfg;
  cfg.config_hash = fnv1a(root.dump());
  cfg.model = parse_model(root);
  cfg.seed = get_or<std::uint64_t>(root, "seed", cfg.seed);
  cfg.threads = get_or<unsigned>(root, "threads", cfg.threads);

  const json& ex = section(root, "experiment");
  cfg.kind = parse_kind(get_or<std::string>(ex, "kind", std::string(to_string(cfg.kind))));
  cfg.z0 = get_or<Count>(ex, "z0", cfg.z0);
  cfg.t_grid = get_or<std::vector<double>>(ex, "t_grid", cfg.t_grid);
  cfg.replications = get_or<std::size_t>(ex, "replications", cfg.replications);
  cfg.lambda_grid = get_or<std::vector<double>>(ex, "lambda_grid", cfg.lambda_grid);
  cfg.mu_grid = get_or<std::vector<double>>(ex, "mu_grid", cfg.mu_grid);
  cfg.skeleton_deltas = get_or<std::vector<double>>(ex, "skeleton_deltas", cfg.skeleton_deltas);
  cfg.level = get_or<double>(ex, "level", cfg.level);
  cfg.known_lambda = get_or<bool>(ex, "known_lambda", cfg.known_lambda);
  cfg.spectral_n = get_or<std::size_t>(ex, "spectral_n", cfg.spectral_n);
  cfg.spectral_tol = get_or<double>(ex, "spectral_tol", cfg.spectral_tol);

  const json& sm = section(root, "sampler");
  cfg.sampler.kind = parse_sampler(get_or<std::string>(sm, "kind", "exact"));
  cfg.sampler.particles = get_or<std::size_t>(sm, "particles", cfg.sampler.particles);
  cfg.sampler.level_spacing = get_or<double>(sm, "level_spacing", cfg.sampler.level_spacing);
  cfg.sampler.max_attempts = get_or<std::size_t>(sm, "max_attempts", cfg.sampler.max_attempts);

  const json& out = section(root, "output");
  cfg.out_dir = get_or<std::string>(out, "dir", cfg.out_dir.string());
  const auto format = get_or<std::string>(out, "format", "csv");
  if (format != "csv" && format != "svg") config_error("output.format must be csv or svg");
  cfg.svg = format == "svg";

  cfg.check();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

EstimateOptions estimate_options(const ExperimentConfig& cfg) {
  EstimateOptions opt;
  opt.m = cfg.model.m();
  if (cfg.known_lambda) opt.lambda = cfg.model.lambda();
  opt.support = cfg.model.offspring().support();
  opt.skeleton_deltas = cfg.skeleton_deltas;
  opt.skeleton_mode = opt.support == std::vector<int>{2} ? SkeletonMode::Binary : SkeletonMode::General;
  opt.level = cfg.level;
  return opt;
}

ReplicateEstimates run_replicates(const ExperimentConfig& cfg, double t, std::size_t grid_index) {
  const ModelParams& params = cfg.model;
  const EstimateOptions options = estimate_options(cfg);
  std::unique_ptr<ExtinctionCurve> curve;
  if (cfg.sampler.kind == SamplerKind::Exact) curve = std::make_unique<ExtinctionCurve>(params, t, 1e-10);
  const std::uint64_t base = derive_seed(cfg.seed, grid_index);

  std::vector<Replicate> results(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    Rng rng(derive_seed(base, r));
    Replicate& out = results[r];
    try {
      Trajectory path;
      switch (cfg.sampler.kind) {
        case SamplerKind::Exact:
          path = simulate_conditioned_exact(*curve, cfg.z0, t, rng);
          break;
        case SamplerKind::Rejection:
          path = simulate_conditioned_rejection(params, cfg.z0, t, rng, cfg.sampler.max_attempts).path;
          break;
        case SamplerKind::Splitting:
          path = simulate_conditioned_splitting(
                     params, cfg.z0, t,
                     SplittingConfig::equally_spaced(t, cfg.sampler.level_spacing, cfg.sampler.particles), rng)
                     .path;
          break;
      }
      out.entries = flatten(estimate_all(path, t, options), cfg.skeleton_deltas);
      out.ok = true;
    } catch (const Error& e) {
      if (is_input_error(e.kind())) throw;
      out.failure = "replication " + std::to_string(r) + ": " + e.what();
    }
  });

  ReplicateEstimates rep;
  rep.t = t;
  std::set<std::string> keys;
  for (const auto& r : results)
    for (const auto& e : r.entries) keys.insert(e.key);
  for (const auto& r : results) {
    if (!r.ok) {
      ++rep.failed_paths;
      rep.failure_log.push_back(r.failure);
      continue;
    }
    ++rep.successes;
    std::map<std::string, const Entry*> index;
    for (const auto& e : r.entries) index[e.key] = &e;
    for (const auto& key : keys) {
      const auto it = index.find(key);
      const Entry* e = it == index.end() ? nullptr : it->second;
      rep.value[key].push_back(e ? e->value : kNaN);
      rep.lower[key].push_back(e ? e->lower : kNaN);
      rep.upper[key].push_back(e ? e->upper : kNaN);
    }
  }
  return rep;
}

std::optional<double> truth_for(const ModelParams& params, const std::string& key) {
  const std::string param = split_key(key).second;
  if (param == "lambda") return params.lambda();
  if (param == "mu") return params.mu();
  if (param == "m") return params.m();
  if (param == "sigma2") return params.derived().sigma2;
  if (param.size() > 1 && param[0] == 'p') {
    const int k = std::stoi(param.substr(1));
    return params.offspring().prob(k);
  }
  return std::nullopt;
}

std::optional<double> limit_for(const ModelParams& params, const std::string& key) {
  const auto [est, param] = split_key(key);
  if (est == to_string(EstimatorId::MleClassic)) {
    if (param == "lambda") return params.derived().lambda_up;
    if (param == "mu") return params.derived().mu_up;
  }
  if (est == to_string(EstimatorId::PkHat) && param.size() > 1 && param[0] == 'p') {
    const auto& up = params.derived().pk_up;
    const auto it = up.find(std::stoi(param.substr(1)));
    return it == up.end() ? 0.0 : it->second;
  }
  return truth_for(params, key);
}

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg, const std::vector<ReplicateEstimates>& reps) {
  std::vector<SummaryRow> rows;
  for (const auto& rep : reps) {
    for (const auto& [key, values] : rep.value) {
      const auto truth = truth_for(cfg.model, key);
      if (!truth) continue;
      const std::vector<double> xs = finite(values);
      SummaryRow row;
      row.t = rep.t;
      row.key = key;
      row.truth = *truth;
      row.limit = limit_for(cfg.model, key).value_or(*truth);
      row.n = xs.size();
      row.failed = rep.failed_paths + (values.size() - xs.size());
      if (xs.empty()) {
        row.median = row.mean = row.mse = kNaN;
      } else {
        row.median = median(xs);
        row.mean = mean(xs);
        double acc = 0;
        for (double x : xs) acc += (x - *truth) * (x - *truth);
        row.mse = acc / static_cast<double>(xs.size());
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<CoverageRow> coverage_of(const ExperimentConfig& cfg, const std::vector<ReplicateEstimates>& reps) {
  std::vector<CoverageRow> rows;
  for (const auto& rep : reps) {
    for (const auto& [key, lo] : rep.lower) {
      const auto& hi = rep.upper.at(key);
      const auto truth = truth_for(cfg.model, key);
      if (!truth) continue;
      std::size_t n = 0, hits = 0;
      double width = 0;
      for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) continue;
        ++n;
        if (lo[i] <= *truth && *truth <= hi[i]) ++hits;
        width += hi[i] - lo[i];
      }
      if (n == 0) continue;
      rows.push_back({rep.t, key, static_cast<double>(hits) / static_cast<double>(n), width / static_cast<double>(n), n});
    }
  }
  return rows;
}

std::vector<BiasRow> bias_surface(const ExperimentConfig& cfg) {
  const OffspringLaw& law = cfg.model.offspring();
  const double m = law.mean();
  const double sigma2 = law.variance();
  std::vector<BiasRow> rows;
  for (double mu : cfg.mu_grid) {
    for (double lambda : cfg.lambda_grid) {
      BiasRow row;
      row.lambda = lambda;
      row.mu = mu;
      const double rho = lambda * (m - 1) - mu;
      row.subcritical = lambda > 0 && mu > 0 && rho < 0;
      if (!row.subcritical) {
        row.lambda_bias = row.mu_bias = row.lambda_rel = row.mu_rel = kNaN;
      } else {
        const double pi = pi_up_of(lambda, mu, m, sigma2);
        const double lambda_up = (lambda * (pi - 1) + lambda * m) / pi;
        const double mu_up = mu * (pi - 1) / pi;
        row.lambda_bias = lambda_up - lambda;
        row.mu_bias = mu - mu_up;
        row.lambda_rel = row.lambda_bias / lambda;
        row.mu_rel = row.mu_bias / mu;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<CheckRow> spectral_checks(const ExperimentConfig& cfg) {
  const TruncatedGenerator gen = build(cfg.model, cfg.spectral_n);
  const SpectralTriple triple = pf_triple(gen, cfg.spectral_tol);
  std::vector<CheckRow> rows;
  auto add = [&](std::string name, double value, double target, double residual, double tol) {
    rows.push_back({std::move(name), value, target, residual, tol, residual < tol});
  };
  const double rho = cfg.model.rho();
  add("rho_star", triple.rho_star, rho, std::abs(triple.rho_star - rho), 1e-6);

  // The right eigenvector is linear in j away from the truncation boundary.
  const std::size_t jmax = std::min<std::size_t>(100, gen.n / 4);
  const double c = triple.v[0];
  double worst = 0;
  for (std::size_t j = 1; j <= jmax; ++j) {
    worst = std::max(worst, std::abs(triple.v[static_cast<Eigen::Index>(j - 1)] / (c * static_cast<double>(j)) - 1));
  }
  add("right_vector_linearity_j<=" + std::to_string(jmax), worst, 0, worst, 1e-4);

  const double mean = triple.stationary_mean();
  add("qprocess_stationary_mean", mean, cfg.model.pi_up(), std::abs(mean - cfg.model.pi_up()), 1e-3);
  add("left_residual", triple.left_residual, 0, triple.left_residual, 1e-8);
  add("right_residual", triple.right_residual, 0, triple.right_residual, 1e-8);
  const double mass = triple.u.sum();
  add("qsd_mass", mass, 1, std::abs(mass - 1), 1e-12);
  return rows;
}

std::filesystem::path run_bias_surface(const ExperimentConfig& cfg) {
  const auto rows = bias_surface(cfg);
  const auto path = prepare(cfg, "bias_surface");
  auto out = open_csv(cfg, path);
  out << "lambda,mu,subcritical,lambda_up_minus_lambda,mu_minus_mu_up,lambda_rel_error,mu_rel_error\n";
  for (const auto& r : rows) {
    out << fmt(r.lambda) << ',' << fmt(r.mu) << ',' << (r.subcritical ? 1 : 0) << ',' << fmt(r.lambda_bias) << ','
        << fmt(r.mu_bias) << ',' << fmt(r.lambda_rel) << ',' << fmt(r.mu_rel) << "\n";
  }
  if (cfg.svg) {
    for (bool lambda_side : {true, false}) {
      svg::Heatmap map;
      map.title = lambda_side ? "Relative bias of classical birth-rate MLE" : "Relative bias of classical death-rate MLE";
      map.x_label = "lambda";
      map.y_label = "mu";
      map.x = cfg.lambda_grid;
      map.y = cfg.mu_grid;
      std::size_t i = 0;
      for (std::size_t r = 0; r < cfg.mu_grid.size(); ++r) {
        map.values.emplace_back();
        for (std::size_t c = 0; c < cfg.lambda_grid.size(); ++c, ++i) {
          map.values.back().push_back(lambda_side ? rows[i].lambda_rel : rows[i].mu_rel);
        }
      }
      svg::write(cfg.out_dir / (lambda_side ? "bias_surface_lambda.svg" : "bias_surface_mu.svg"), svg::render(map));
    }
  }
  return path;
}

namespace {

std::filesystem::path write_summary(const ExperimentConfig& cfg, const std::string& stem, bool mse_plot) {
  const auto reps = run_grid(cfg);
  const auto rows = summarize(cfg, reps);
  const auto path = prepare(cfg, stem);
  auto out = open_csv(cfg, path);
  out << "t,estimator,parameter,median,mean,mse,truth,limit,n,failed\n";
  for (const auto& r : rows) {
    const auto [est, param] = split_key(r.key);
    out << fmt(r.t) << ',' << est << ',' << param << ',' << fmt(r.median) << ',' << fmt(r.mean) << ',' << fmt(r.mse)
        << ',' << fmt(r.truth) << ',' << fmt(r.limit) << ',' << r.n << ',' << r.failed << "\n";
  }
  if (cfg.svg) plot_by_parameter(cfg, rows, stem, mse_plot);
  return path;
}

}  // namespace

std::filesystem::path run_convergence(const ExperimentConfig& cfg) { return write_summary(cfg, "convergence", false); }

std::filesystem::path run_mse(const ExperimentConfig& cfg) { return write_summary(cfg, "mse", true); }

std::filesystem::path run_coverage(const ExperimentConfig& cfg) {
  const auto reps = run_grid(cfg);
  const auto rows = coverage_of(cfg, reps);
  const auto path = prepare(cfg, "coverage");
  auto out = open_csv(cfg, path);
  out << "t,estimator,parameter,level,coverage,mean_width,n\n";
  for (const auto& r : rows) {
    const auto [est, param] = split_key(r.key);
    out << fmt(r.t) << ',' << est << ',' << param << ',' << fmt(cfg.level) << ',' << fmt(r.coverage) << ','
        << fmt(r.mean_width) << ',' << r.n << "\n";
  }
  return path;
}

std::filesystem::path run_spectral_check(const ExperimentConfig& cfg) {
  const auto rows = spectral_checks(cfg);
  const auto path = prepare(cfg, "spectral_check");
  auto out = open_csv(cfg, path);
  out << "check,value,target,residual,tolerance,pass\n";
  for (const auto& r : rows) {
    out << r.check << ',' << fmt(r.value) << ',' << fmt(r.target) << ',' << fmt(r.residual) << ',' << fmt(r.tolerance)
        << ',' << (r.pass ? 1 : 0) << "\n";
  }
  return path;
}

std::filesystem::path run_single(const ExperimentConfig& cfg) {
  const double t = cfg.t_grid.back();
  Rng rng(derive_seed(cfg.seed, 0));
  Trajectory path;
  switch (cfg.sampler.kind) {
    case SamplerKind::Exact:
      path = simulate_conditioned_exact(ExtinctionCurve(cfg.model, t, 1e-10), cfg.z0, t, rng);
      break;
    case SamplerKind::Rejection:
      path = simulate_conditioned_rejection(cfg.model, cfg.z0, t, rng, cfg.sampler.max_attempts).path;
      break;
    case SamplerKind::Splitting:
      path = simulate_conditioned_splitting(
                 cfg.model, cfg.z0, t,
                 SplittingConfig::equally_spaced(t, cfg.sampler.level_spacing, cfg.sampler.particles), rng)
                 .path;
      break;
  }
  const auto traj_path = prepare(cfg, "single_run_path");
  {
    auto out = open_csv(cfg, traj_path);
    write_trajectory_csv(out, path);
  }
  std::vector<std::string> failures;
  const auto reports = estimate_all(path, t, estimate_options(cfg), &failures);
  for (const auto& f : failures) std::cerr << "estimator skipped: " << f << "\n";
  const auto est_path = prepare(cfg, "single_run_estimates");
  auto out = open_csv(cfg, est_path);
  write_report_csv_header(out);
  for (const auto& r : reports) write_report_csv(out, r);

  if (cfg.svg) {
    svg::Series s{"Z", {}, {}};
    Count z = path.z0;
    s.x.push_back(0);
    s.y.push_back(static_cast<double>(z));
    for (const auto& e : path.events) {
      s.x.push_back(e.time);
      s.y.push_back(static_cast<double>(z));
      z = e.state_after();
      s.x.push_back(e.time);
      s.y.push_back(static_cast<double>(z));
    }
    s.x.push_back(t);
    s.y.push_back(static_cast<double>(z));
    svg::LinePlot plot{"Conditioned path", "time", "population", {std::move(s)}, {}};
    svg::write(cfg.out_dir / "single_run_path.svg", svg::render(plot));
  }
  return est_path;
}

std::filesystem::path run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  switch (cfg.kind) {
    case ExperimentKind::BiasSurface: return run_bias_surface(cfg);
    case ExperimentKind::Convergence: return run_convergence(cfg);
    case ExperimentKind::Mse: return run_mse(cfg);
    case ExperimentKind::Coverage: return run_coverage(cfg);
    case ExperimentKind::SpectralCheck: return run_spectral_check(cfg);
    case ExperimentKind::SingleRun: return run_single(cfg);
  }
  config_error("unknown experiment kind");
}

}  // namespace subcrit
