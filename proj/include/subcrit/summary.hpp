#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace subcrit {

double mean(std::span<const double> xs);
/// Unbiased sample variance (n - 1 denominator).
double variance(std::span<const double> xs);
double median(std::vector<double> xs);
double correlation(std::span<const double> xs, std::span<const double> ys);

/// Empirical probability mass function of nonnegative integer samples,
/// indexed by value.
std::vector<double> empirical_pmf(std::span<const long long> samples);

/// Anderson-Darling A² statistic for normality with estimated mean and
/// variance, including the small-sample factor (1 + 0.75/n + 2.25/n²).
double anderson_darling_normal(std::vector<double> xs);

/// Critical value of the adjusted A² statistic at significance 0.01.
inline constexpr double kAndersonDarlingCritical01 = 1.035;

}  // namespace subcrit
