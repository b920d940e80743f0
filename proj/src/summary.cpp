#include "subcrit/summary.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "subcrit/error.hpp"

namespace subcrit {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorKind::DomainError, "mean of empty sample");
  double acc = 0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorKind::DomainError, "variance needs two samples");
  const double m = mean(xs);
  double acc = 0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw Error(ErrorKind::DomainError, "median of empty sample");
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double upper = xs[mid];
  if (xs.size() % 2 == 1) return upper;
  const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw Error(ErrorKind::DomainError, "correlation needs paired samples");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0;
  double sxx = 0;
  double syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> empirical_pmf(std::span<const long long> samples) {
  std::vector<double> pmf;
  for (long long s : samples) {
    if (s < 0) throw Error(ErrorKind::DomainError, "negative sample in pmf");
    if (static_cast<std::size_t>(s) >= pmf.size()) pmf.resize(static_cast<std::size_t>(s) + 1, 0.0);
    pmf[static_cast<std::size_t>(s)] += 1.0;
  }
  for (double& p : pmf) p /= static_cast<double>(samples.size());
  return pmf;
}

double anderson_darling_normal(std::vector<double> xs) {
  const std::size_t n = xs.size();
  if (n < 8) throw Error(ErrorKind::DomainError, "Anderson-Darling needs at least 8 samples");
  const double m = mean(xs);
  const double sd = std::sqrt(variance(xs));
  std::sort(xs.begin(), xs.end());
  const boost::math::normal_distribution<double> normal;
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = boost::math::cdf(normal, (xs[i] - m) / sd);
    const double hi = boost::math::cdf(boost::math::complement(normal, (xs[n - 1 - i] - m) / sd));
    acc += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log(hi));
  }
  const double nd = static_cast<double>(n);
  const double a2 = -nd - acc / nd;
  return a2 * (1.0 + 0.75 / nd + 2.25 / (nd * nd));
}

}  // namespace subcrit
