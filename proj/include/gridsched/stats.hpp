#pragma once

#include <span>
#include <vector>

namespace gridsched {

double mean(std::span<const double> xs);
double median(std::vector<double> xs);

// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double sample_stddev(std::span<const double> xs);

// Sorted sample at 1-based index ceil(c*n), clamped to [1, n].
double nearest_rank_quantile(std::vector<double> xs, double c);

// Two-sided standard normal critical value for confidence c, i.e. Phi^-1((1+c)/2).
double normal_critical(double confidence);

double normal_cdf(double x);

double skewness(std::span<const double> xs);

// Lag-k sample autocorrelation with the usual 1/n autocovariance.
double autocorrelation(std::span<const double> xs, int lag);

}  // namespace gridsched
