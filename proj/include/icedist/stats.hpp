#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace icedist {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
}

double normal_quantile(double p);

/// Sample variance with denominator n-1 (Welford accumulation order).
struct RunningMoments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

/// Percentile of a sample by linear interpolation between order statistics
/// (type-7 definition). `sorted` must be ascending.
double percentile_sorted(std::span<const double> sorted, double q);

/// Copies, sorts and takes the type-7 percentile.
double percentile(std::span<const double> values, double q);

double mean_of(std::span<const double> values);
double sd_of(std::span<const double> values);

/// Two-sided Kolmogorov-Smirnov distance between a sample and a continuous cdf.
template <typename Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace icedist
