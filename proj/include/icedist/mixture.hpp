#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icedist/json.hpp"

#include "icedist/rng.hpp"

namespace icedist {

/// Raised when mixture quantile inversion cannot bracket or resolve a root.
class RootFindingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Finite univariate Gaussian mixture. Weights form a simplex (tolerance
/// 1e-12), sds are strictly positive, K >= 1. Immutable after construction.
class GaussianMixture {
public:
    GaussianMixture(std::vector<double> weights, std::vector<double> means, std::vector<double> sds);

    static GaussianMixture single(double mean, double sd) { return GaussianMixture({1.0}, {mean}, {sd}); }

    std::size_t size() const { return weights_.size(); }
    std::span<const double> weights() const { return weights_; }
    std::span<const double> means() const { return means_; }
    std::span<const double> sds() const { return sds_; }

    double pdf(double y) const;
    double cdf(double y) const;

    /// Inverse cdf by bisection to absolute tolerance 1e-9. Throws
    /// RootFindingError for components with sd below 1e-10 or when the
    /// bracket cannot be expanded around q.
    double quantile(double q) const;

    double sample(Rng& rng) const;

    double mean() const;
    double variance() const;

private:
    std::vector<double> weights_;
    std::vector<double> means_;
    std::vector<double> sds_;
};

// Flat record {"K", "w_1".., "mu_1"..., "tau_1"...}.
Json mixture_to_json(const GaussianMixture& gm);
GaussianMixture mixture_from_json(const Json& j);

}  // namespace icedist
