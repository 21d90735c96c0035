#pragma once
// Small statistics toolkit used by experiments and validation.

#include <functional>
#include <span>
#include <vector>

namespace growth::stats {

double mean(std::span<const double> x);
double median(std::vector<double> x);
// Interquartile range with linear interpolation between order statistics.
double iqr(std::vector<double> x);
double quantile(std::vector<double> x, double p);

// Upper tail P(chi2_dof > stat).
double chi_square_p(double stat, double dof);
// Pearson statistic; expected counts must be positive.
double chi_square_stat(std::span<const double> observed, std::span<const double> expected);

// Kolmogorov-Smirnov statistic of samples against a continuous CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// One-sided sign test: P(Binomial(n, 1/2) >= successes).
double sign_test_p(std::size_t successes, std::size_t n);

// Standard error of the mean by non-overlapping batch means.
double batch_means_stderr(std::span<const double> x, std::size_t batches);

}  // namespace growth::stats
