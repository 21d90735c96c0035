#include "growth/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "growth/errors.hpp"

namespace growth::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw InvalidArgument("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = p * static_cast<double>(x.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double iqr(std::vector<double> x) { return quantile(x, 0.75) - quantile(x, 0.25); }

double chi_square_p(double stat, double dof) {
  if (!(dof > 0)) throw InvalidArgument("chi-square needs dof > 0");
  if (stat <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

double chi_square_stat(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size()) throw InvalidArgument("chi-square: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0)) throw InvalidArgument("chi-square: expected counts must be positive");
    const double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidArgument("KS statistic of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double sign_test_p(std::size_t successes, std::size_t n) {
  if (successes > n) throw InvalidArgument("sign test: successes > n");
  if (successes == 0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::binomial(static_cast<double>(n), 0.5),
                                                  static_cast<double>(successes) - 1.0));
}

double batch_means_stderr(std::span<const double> x, std::size_t batches) {
  if (batches < 2 || x.size() < batches) throw InvalidArgument("batch means need >= 2 batches of data");
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * x.size() / batches, hi = (b + 1) * x.size() / batches;
    for (std::size_t i = lo; i < hi; ++i) means[b] += x[i];
    means[b] /= static_cast<double>(hi - lo);
  }
  const double m = mean(means);
  double ss = 0.0;
  for (double v : means) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

}  // namespace growth::stats
