#include "subcrit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <boost/math/distributions/normal.hpp>

#include "subcrit/error.hpp"

namespace subcrit {

std::string_view to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::MleClassic: return "MLE_CLASSIC";
    case EstimatorId::CConsistent: return "C_CONSISTENT";
    case EstimatorId::PkHat: return "PK_HAT";
    case EstimatorId::PkTilde: return "PK_TILDE";
    case EstimatorId::PkTildePlugin: return "PK_TILDE_PLUGIN";
    case EstimatorId::PkMultinomial: return "PK_MULTINOMIAL";
    case EstimatorId::Skeleton: return "SKELETON";
    case EstimatorId::QmleFixedPoint: return "QMLE_FIXEDPOINT";
    case EstimatorId::QmleFiniteSupport: return "QMLE_FINITE_SUPPORT";
  }
  return "UNKNOWN";
}

const ParameterEstimate* EstimateReport::find(std::string_view name) const noexcept {
  for (const auto& e : estimates) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

double EstimateReport::value(std::string_view name) const {
  const ParameterEstimate* e = find(name);
  if (e == nullptr || !e->value) {
    throw Error(ErrorKind::BadInput, std::string(to_string(id)) + " has no defined '" + std::string(name) + "'");
  }
  return *e->value;
}

namespace {

void write_optional(std::ostream& out, const std::optional<double>& v) {
  if (!v) {
    out << "NA";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  out << buf;
}

}  // namespace

void write_report_csv_header(std::ostream& out) {
  out << "estimator_id,t,parameter,value,se,ci_lower,ci_upper,diagnostics\n";
}

void write_report_csv(std::ostream& out, const EstimateReport& report) {
  std::string diag;
  for (const auto& [key, value] : report.diagnostics) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    if (!diag.empty()) diag += ';';
    diag += key + '=' + buf;
  }
  for (const auto& e : report.estimates) {
    out << to_string(report.id) << ',';
    write_optional(out, report.t);
    out << ',' << e.name << ',';
    write_optional(out, e.value);
    out << ',';
    write_optional(out, e.se);
    out << ',';
    write_optional(out, e.lower);
    out << ',';
    write_optional(out, e.upper);
    out << ',' << diag << '\n';
  }
}

RateEstimate mle_classic(const SufficientStats& stats) {
  if (!(stats.exposure > 0)) throw Error(ErrorKind::ZeroExposure, "tau_t = 0");
  return {static_cast<double>(stats.births) / stats.exposure, static_cast<double>(stats.deaths) / stats.exposure};
}

CConsistentEstimate c_consistent(const SufficientStats& stats, double m) {
  const double birth_exposure = stats.exposure + (m - 1.0) * stats.t;
  if (!(birth_exposure > 0)) throw Error(ErrorKind::ZeroExposure, "tau_t + (m-1)t is not positive");
  CConsistentEstimate out;
  out.lambda = static_cast<double>(stats.births) / birth_exposure;
  const double death_exposure = stats.exposure - stats.t;
  if (death_exposure > 0) out.mu = static_cast<double>(stats.deaths) / death_exposure;
  return out;
}

PkEstimate pk_estimators(const SufficientStats& stats, int k, const LambdaMode& mode) {
  if (stats.births == 0) throw Error(ErrorKind::NoBirths, "no birth events observed");
  if (k < 2) throw Error(ErrorKind::DomainError, "offspring size must be >= 2");
  const double bk = static_cast<double>(stats.births_of_size(k));
  const double exposure = stats.exposure + (k - 1.0) * stats.t;
  if (!(exposure > 0)) throw Error(ErrorKind::ZeroExposure, "tau_t + (k-1)t is not positive");
  PkEstimate out;
  out.hat = bk / static_cast<double>(stats.births);
  if (const auto* known = std::get_if<KnownLambda>(&mode)) {
    out.tilde = bk / (known->lambda * exposure);
  } else {
    const double m = std::get<PluginLambda>(mode).m;
    out.tilde = (stats.exposure + (m - 1.0) * stats.t) / exposure * out.hat;
  }
  return out;
}

std::map<int, double> pk_multinomial(const SufficientStats& stats, const std::vector<int>& support) {
  std::map<int, double> weights;
  double total = 0;
  for (int k : support) {
    const double exposure = stats.exposure + (k - 1.0) * stats.t;
    if (!(exposure > 0)) throw Error(ErrorKind::ZeroExposure, "tau_t + (k-1)t is not positive");
    weights[k] = static_cast<double>(stats.births_of_size(k)) / exposure;
    total += weights[k];
  }
  if (!(total > 0)) throw Error(ErrorKind::NoBirths, "no births on the support");
  for (auto& [k, w] : weights) w /= total;
  return weights;
}

SkeletonMoments skeleton_moments_exact(const ModelParams& params, double delta) {
  const double m_star = std::exp(params.rho() * delta);
  return {m_star, m_star * (1.0 - m_star) * params.pi_up(), 0};
}

SkeletonMoments skeleton_moments(const Trajectory& traj, double delta) {
  if (!(delta > 0)) throw Error(ErrorKind::DomainError, "skeleton step must be positive");
  const auto n_obs = static_cast<std::size_t>(std::floor(traj.horizon / delta * (1 + 1e-12))) + 1;
  if (n_obs < 3) throw Error(ErrorKind::SkeletonDegenerate, "need horizon >= 2 delta");
  std::vector<double> z(n_obs);
  for (std::size_t n = 0; n < n_obs; ++n) {
    z[n] = static_cast<double>(traj.state_at(std::min(traj.horizon, delta * static_cast<double>(n))));
  }
  const std::size_t pairs = n_obs - 1;
  double mx = 0;
  double my = 0;
  for (std::size_t n = 0; n < pairs; ++n) {
    mx += z[n];
    my += z[n + 1];
  }
  mx /= static_cast<double>(pairs);
  my /= static_cast<double>(pairs);
  double sxx = 0;
  double sxy = 0;
  for (std::size_t n = 0; n < pairs; ++n) {
    sxx += (z[n] - mx) * (z[n] - mx);
    sxy += (z[n] - mx) * (z[n + 1] - my);
  }
  if (!(sxx > 0)) throw Error(ErrorKind::SkeletonDegenerate, "skeleton is constant");
  SkeletonMoments out;
  out.pairs = pairs;
  out.m_star = sxy / sxx;
  out.sigma2_star = out.m_star * (my - out.m_star * mx);
  return out;
}

RateEstimate binary_skeleton_rates(double m_star, double sigma2_star, double delta) {
  if (!(m_star > 0 && m_star < 1)) {
    throw Error(ErrorKind::SkeletonDegenerate, "skeleton mean " + std::to_string(m_star) + " outside (0, 1)");
  }
  const double scale = std::log(m_star) / (2 * delta);
  const double ratio = sigma2_star / (m_star * (m_star - 1));
  return {scale * (ratio + 1), scale * (ratio - 1)};
}

SkeletonSolution general_skeleton_solve(double m_star, double sigma2_star, double lambda_up, double mu_up,
                                        double delta) {
  if (!(m_star > 0 && m_star < 1)) {
    throw Error(ErrorKind::SkeletonDegenerate, "skeleton mean " + std::to_string(m_star) + " outside (0, 1)");
  }
  const double rho = std::log(m_star) / delta;
  const double pi_up = sigma2_star / (m_star * (1 - m_star));
  if (!(pi_up > 1)) throw Error(ErrorKind::SkeletonDegenerate, "implied pi_up <= 1");
  SkeletonSolution s;
  s.mu = mu_up * pi_up / (pi_up - 1);
  s.lambda = (lambda_up * pi_up - rho - s.mu) / pi_up;
  if (!(s.lambda > 0 && s.mu > 0)) throw Error(ErrorKind::SkeletonDegenerate, "implied rates not positive");
  s.m = 1 + (rho + s.mu) / s.lambda;
  if (!(s.m > 1)) throw Error(ErrorKind::SkeletonDegenerate, "implied offspring mean <= 1");
  s.sigma2 = (1 - pi_up) * rho / s.lambda - s.m * (s.m - 1);
  return s;
}

EstimateReport skeleton_estimators(const Trajectory& traj, double delta, SkeletonMode mode) {
  const SkeletonMoments mom = skeleton_moments(traj, delta);
  EstimateReport report;
  report.id = EstimatorId::Skeleton;
  report.t = traj.horizon;
  report.diagnostics = {{"delta", delta},
                        {"m_star", mom.m_star},
                        {"sigma2_star", mom.sigma2_star},
                        {"pairs", static_cast<double>(mom.pairs)}};
  if (mode == SkeletonMode::Binary) {
    const RateEstimate r = binary_skeleton_rates(mom.m_star, mom.sigma2_star, delta);
    report.estimates = {{"lambda", r.lambda, {}, {}, {}}, {"mu", r.mu, {}, {}, {}}};
    return report;
  }
  const RateEstimate classic = mle_classic(stats(traj, traj.horizon));
  const SkeletonSolution s = general_skeleton_solve(mom.m_star, mom.sigma2_star, classic.lambda, classic.mu, delta);
  report.estimates = {{"lambda", s.lambda, {}, {}, {}},
                      {"mu", s.mu, {}, {}, {}},
                      {"m", s.m, {}, {}, {}},
                      {"sigma2", s.sigma2, {}, {}, {}}};
  return report;
}

namespace {

// Σ_r b_r / (r-1+x) and Σ_r b_r / (r-1+x)^2.
std::pair<double, double> state_sums(const SufficientStats& stats, double x) {
  double s1 = 0;
  double s2 = 0;
  for (std::size_t r = 1; r < stats.births_by_state.size(); ++r) {
    const auto br = static_cast<double>(stats.births_from_state(static_cast<Count>(r)));
    if (br == 0) continue;
    const double d = static_cast<double>(r) - 1.0 + x;
    s1 += br / d;
    s2 += br / (d * d);
  }
  return {s1, s2};
}

}  // namespace

double qmle_map(const SufficientStats& stats, double x) {
  const auto [s1, s2] = state_sums(stats, x);
  return 1.0 - stats.exposure / stats.t + static_cast<double>(stats.births) / s1;
}

QmleFixedPoint qmle_fixed_point(const SufficientStats& stats) {
  if (!(stats.exposure > stats.t)) throw Error(ErrorKind::DegenerateExposure, "tau_t <= t");
  if (stats.births == 0) throw Error(ErrorKind::NoBirths, "no birth events observed");
  // g(x) = x - F(x) is nonincreasing (F' >= 1 by Cauchy-Schwarz), so the
  // root is unique when it exists.
  auto g = [&](double x) { return x - qmle_map(stats, x); };
  double lo = std::max(0.0, 1.0 - stats.exposure / stats.t) + 1e-9;
  if (!(g(lo) > 0)) throw Error(ErrorKind::NoFixedPoint, "x - F(x) is not positive at the lower bracket");
  double hi = std::max(2.0, 2 * lo);
  while (!(g(hi) < 0)) {
    lo = hi;
    hi *= 2;
    if (hi > 1e9) throw Error(ErrorKind::NoFixedPoint, "no sign change of x - F(x) in (0, 1e9]");
  }
  QmleFixedPoint out;
  std::size_t it = 0;
  while (hi - lo > 1e-13 * std::max(1.0, hi) && it < 200) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
    ++it;
  }
  double x = 0.5 * (lo + hi);
  for (int polish = 0; polish < 3; ++polish) {
    const auto [s1, s2] = state_sums(stats, x);
    const double b = static_cast<double>(stats.births);
    const double fx = 1.0 - stats.exposure / stats.t + b / s1;
    const double dfx = b * s2 / (s1 * s1);
    const double slope = 1.0 - dfx;
    if (slope == 0) break;
    const double next = x - (x - fx) / slope;
    if (!(next > 0) || !std::isfinite(next)) break;
    x = next;
    ++it;
  }
  out.m = x;
  out.iterations = it;
  out.residual = std::abs(x - qmle_map(stats, x));
  out.lambda = static_cast<double>(stats.births) / (stats.exposure + (x - 1.0) * stats.t);
  out.mu = static_cast<double>(stats.deaths) / (stats.exposure - stats.t);
  return out;
}

QmleFiniteSupport qmle_finite_support(const SufficientStats& stats, const std::vector<int>& support) {
  if (!(stats.exposure > stats.t)) throw Error(ErrorKind::DegenerateExposure, "tau_t <= t");
  QmleFiniteSupport out;
  for (int k : support) {
    out.lambda += static_cast<double>(stats.births_of_size(k)) / (stats.exposure + (k - 1.0) * stats.t);
  }
  if (!(out.lambda > 0)) throw Error(ErrorKind::NoBirths, "no births on the support");
  out.pk = pk_multinomial(stats, support);
  for (const auto& [k, p] : out.pk) out.m += k * p;
  out.mu = static_cast<double>(stats.deaths) / (stats.exposure - stats.t);
  return out;
}

double normal_quantile(double level) {
  if (!(level > 0 && level < 1)) throw Error(ErrorKind::DomainError, "coverage level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

Interval asymptotic_ci(double point, double se, double level) {
  if (!(se >= 0)) throw Error(ErrorKind::DomainError, "standard error must be nonnegative");
  const double z = normal_quantile(level);
  return {point - z * se, point + z * se, se};
}

double se_lambda_tilde(double lambda, double pi_up, double m, double t) {
  return std::sqrt(lambda / (t * (pi_up + m - 1.0)));
}

double se_mu_tilde(double mu, double pi_up, double t) { return std::sqrt(mu / (t * (pi_up - 1.0))); }

double se_pk_tilde(double pk, double lambda, double pi_up, int k, double t) {
  return std::sqrt(pk / (t * lambda * (pi_up + k - 1.0)));
}

namespace {

ParameterEstimate with_ci(std::string name, double value, std::optional<double> se, double level) {
  ParameterEstimate e{std::move(name), value, {}, {}, {}};
  if (se && std::isfinite(*se)) {
    const Interval ci = asymptotic_ci(value, *se, level);
    e.se = ci.se;
    e.lower = ci.lower;
    e.upper = ci.upper;
  }
  return e;
}

std::string pk_name(int k) { return "p" + std::to_string(k); }

}  // namespace

std::vector<EstimateReport> estimate_all(const Trajectory& traj, double t, const EstimateOptions& options,
                                         std::vector<std::string>* failures) {
  const SufficientStats st = stats(traj, t);
  const double pi_hat = st.t > 0 ? st.exposure / st.t : 0.0;
  const std::map<std::string, double> base_diag = {{"tau_over_t", pi_hat},
                                                   {"births", static_cast<double>(st.births)},
                                                   {"deaths", static_cast<double>(st.deaths)},
                                                   {"terminal_state", static_cast<double>(st.terminal_state)}};
  std::vector<EstimateReport> out;
  auto attempt = [&](EstimatorId id, auto&& body) {
    EstimateReport r;
    r.id = id;
    r.t = t;
    r.diagnostics = base_diag;
    try {
      body(r);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      if (failures != nullptr) failures->push_back(std::string(to_string(id)) + ": " + e.what());
    }
  };

  attempt(EstimatorId::MleClassic, [&](EstimateReport& r) {
    const RateEstimate e = mle_classic(st);
    const double b = static_cast<double>(st.births);
    const double d = static_cast<double>(st.deaths);
    r.estimates.push_back(with_ci("lambda", e.lambda, std::sqrt(b) / st.exposure, options.level));
    r.estimates.push_back(with_ci("mu", e.mu, std::sqrt(d) / st.exposure, options.level));
  });

  std::optional<double> lambda_tilde;
  attempt(EstimatorId::CConsistent, [&](EstimateReport& r) {
    const CConsistentEstimate e = c_consistent(st, options.m);
    lambda_tilde = e.lambda;
    r.estimates.push_back(with_ci("lambda", e.lambda, se_lambda_tilde(e.lambda, pi_hat, options.m, t), options.level));
    if (e.mu) {
      r.estimates.push_back(with_ci("mu", *e.mu, se_mu_tilde(*e.mu, pi_hat, t), options.level));
    } else {
      r.estimates.push_back({"mu", {}, {}, {}, {}});
      r.diagnostics["mu_undefined"] = 1;
    }
  });

  attempt(EstimatorId::PkHat, [&](EstimateReport& r) {
    for (int k : options.support) {
      const PkEstimate e = pk_estimators(st, k, PluginLambda{options.m});
      r.estimates.push_back({pk_name(k), e.hat, {}, {}, {}});
    }
  });

  const EstimatorId tilde_id = options.lambda ? EstimatorId::PkTilde : EstimatorId::PkTildePlugin;
  attempt(tilde_id, [&](EstimateReport& r) {
    const LambdaMode mode = options.lambda ? LambdaMode{KnownLambda{*options.lambda}} : LambdaMode{PluginLambda{options.m}};
    const double lambda_for_se = options.lambda ? *options.lambda : lambda_tilde.value_or(0.0);
    for (int k : options.support) {
      const PkEstimate e = pk_estimators(st, k, mode);
      std::optional<double> se;
      if (lambda_for_se > 0) se = se_pk_tilde(e.tilde, lambda_for_se, pi_hat, k, t);
      r.estimates.push_back(with_ci(pk_name(k), e.tilde, se, options.level));
    }
  });

  attempt(EstimatorId::PkMultinomial, [&](EstimateReport& r) {
    for (const auto& [k, p] : pk_multinomial(st, options.support)) r.estimates.push_back({pk_name(k), p, {}, {}, {}});
  });

  for (double delta : options.skeleton_deltas) {
    attempt(EstimatorId::Skeleton, [&](EstimateReport& r) {
      Trajectory view = traj;
      view.horizon = t;
      std::erase_if(view.events, [t](const Event& e) { return e.time > t; });
      EstimateReport s = skeleton_estimators(view, delta, options.skeleton_mode);
      r.estimates = std::move(s.estimates);
      for (const auto& [key, value] : s.diagnostics) r.diagnostics[key] = value;
    });
  }

  attempt(EstimatorId::QmleFixedPoint, [&](EstimateReport& r) {
    const QmleFixedPoint e = qmle_fixed_point(st);
    r.estimates = {{"lambda", e.lambda, {}, {}, {}}, {"mu", e.mu, {}, {}, {}}, {"m", e.m, {}, {}, {}}};
    r.diagnostics["fixed_point_iterations"] = static_cast<double>(e.iterations);
    r.diagnostics["fixed_point_residual"] = e.residual;
  });

  attempt(EstimatorId::QmleFiniteSupport, [&](EstimateReport& r) {
    const QmleFiniteSupport e = qmle_finite_support(st, options.support);
    r.estimates = {{"lambda", e.lambda, {}, {}, {}}, {"mu", e.mu, {}, {}, {}}, {"m", e.m, {}, {}, {}}};
    for (const auto& [k, p] : e.pk) r.estimates.push_back({pk_name(k), p, {}, {}, {}});
  });

  return out;
}

}  // namespace subcrit
