#include "icedist/rng.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace icedist {

std::vector<double> Rng::dirichlet(std::span<const double> alpha) {
    std::vector<double> out(alpha.size());
    double total = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        out[k] = std::max(gamma(alpha[k]), std::numeric_limits<double>::min());
        total += out[k];
    }
    for (double& v : out) v /= total;
    return out;
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    // Stack buffer is enough for the component counts used here.
    double cum[64];
    std::vector<double> heap;
    double* w = cum;
    if (log_weights.size() > 64) {
        heap.resize(log_weights.size());
        w = heap.data();
    }
    double total = 0.0;
    for (std::size_t k = 0; k < log_weights.size(); ++k) {
        total += std::exp(log_weights[k] - top);
        w[k] = total;
    }
    const double u = uniform() * total;
    for (std::size_t k = 0; k + 1 < log_weights.size(); ++k) {
        if (u < w[k]) return k;
    }
    return log_weights.size() - 1;
}

std::size_t Rng::categorical(std::span<const double> weights) {
    const double u = uniform();
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
        cum += weights[k];
        if (u < cum) return k;
    }
    return weights.size() - 1;
}

}  // namespace icedist
