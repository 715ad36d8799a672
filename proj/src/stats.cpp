#include "mvlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "mvlab/errors.hpp"
#include "mvlab/noise.hpp"

namespace mvlab {

double mean(const std::vector<double>& v) {
    if (v.empty()) throw ArgumentError("mean: empty sample");
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    if (v.size() < 2) throw ArgumentError("variance: need at least 2 samples");
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double stddev(const std::vector<double>& v) { return std::sqrt(variance(v)); }

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ArgumentError("fit_line: need >= 2 paired samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0) throw ArgumentError("fit_line: degenerate abscissae");
    LinearFit f;
    f.n = static_cast<int>(x.size());
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw ArgumentError("ks_statistic: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - f));
        d = std::max(d, std::abs(static_cast<double>(i) / n - f));
    }
    return d;
}

double weighted_ks_to_step(std::vector<double> samples) {
    if (samples.empty()) throw ArgumentError("weighted_ks_to_step: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double z = samples[i];
        const double w = std::min(std::abs(z), 1.0);
        const double step = z >= 0 ? 1.0 : 0.0;
        // empirical CDF immediately at and just below the sample point
        const double f_hi = (static_cast<double>(i) + 1.0) / n;
        const double f_lo = static_cast<double>(i) / n;
        d = std::max(d, w * std::abs(f_hi - step));
        d = std::max(d, w * std::abs(f_lo - step));
    }
    return d;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw ArgumentError("percentile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

BootstrapCI bootstrap_ci(const std::vector<double>& data, int n_resamples, std::uint64_t seed,
                         const std::function<double(const std::vector<double>&)>& stat,
                         double level) {
    if (data.empty()) throw ArgumentError("bootstrap_ci: empty sample");
    NoiseStream draws(seed, 0xb0075ULL);
    std::vector<double> stats(static_cast<std::size_t>(n_resamples));
    std::vector<double> resample(data.size());
    const std::size_t n = data.size();
    for (int b = 0; b < n_resamples; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const double u = draws.uniform(static_cast<std::uint64_t>(b), i, 0);
            std::size_t idx = static_cast<std::size_t>(u * static_cast<double>(n));
            if (idx >= n) idx = n - 1;
            resample[i] = data[idx];
        }
        stats[static_cast<std::size_t>(b)] = stat(resample);
    }
    BootstrapCI ci;
    const double alpha = (1.0 - level) / 2.0;
    ci.lo = percentile(stats, alpha);
    ci.hi = percentile(stats, 1.0 - alpha);
    ci.spread = (ci.hi - ci.lo) / 2.0;
    return ci;
}

}  // namespace mvlab
