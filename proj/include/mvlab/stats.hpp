#ifndef MVLAB_STATS_HPP
#define MVLAB_STATS_HPP

#include <cstdint>
#include <functional>
#include <vector>

namespace mvlab {

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);  // unbiased
double stddev(const std::vector<double>& v);

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
    int n = 0;
};

// Ordinary least squares y ~ intercept + slope * x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Standard normal CDF.
double norm_cdf(double z);

// Kolmogorov statistic of the sample against a continuous CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// sup_z (|z| ^ 1) |F_hat(z) - step(z)| against the unit step at 0.
double weighted_ks_to_step(std::vector<double> samples);

double percentile(std::vector<double> v, double q);  // q in [0,1], sorts a copy

struct BootstrapCI {
    double lo = 0;
    double hi = 0;
    double spread = 0;  // half-width proxy: (hi - lo) / 2
};

// Percentile bootstrap of a statistic of a sample, deterministic in seed.
BootstrapCI bootstrap_ci(const std::vector<double>& data, int n_resamples, std::uint64_t seed,
                         const std::function<double(const std::vector<double>&)>& stat,
                         double level = 0.95);

}  // namespace mvlab

#endif
