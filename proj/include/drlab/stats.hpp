#pragma once

#include <functional>
#include <span>
#include <vector>

#include "drlab/rng.hpp"

namespace drlab {

/// Sup-distance between the empirical CDF of `sorted` and a model CDF.
/// `cdf_left(x)` is the left limit F(x-), so atoms are handled exactly.
double ks_one_sample(std::span<const double> sorted, const std::function<double(double)>& cdf,
                     const std::function<double(double)>& cdf_left);

/// Two-sample Kolmogorov-Smirnov statistic; inputs must be sorted.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Asymptotic critical value c(alpha)/sqrt(n) (one sample) and
/// c(alpha)*sqrt((n+m)/(n*m)) (two sample); c(0.01) = 1.6276.
double ks_critical_one(double alpha, std::size_t n);
double ks_critical_two(double alpha, std::size_t n, std::size_t m);
/// Asymptotic Kolmogorov survival function P(K > x).
double kolmogorov_sf(double x);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
};
MeanSd mean_sd(std::span<const double> xs);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double normal_quantile(double u);

/// Binomial(n, pr) upper quantile used to bound false-rejection counts
/// in repeated tests: smallest k with P(Bin > k) <= tail.
int binomial_upper(int n, double pr, double tail);

}  // namespace drlab
