#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace icedist {

// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seedable 64-bit generator. Every stochastic routine takes one of these by
/// reference; parallel work obtains its own stream via split().
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    /// Child generator for stream `index`; depends only on (seed, index).
    Rng split(std::uint64_t index) const {
        return Rng(mix64(seed_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
    }

    /// Uniform on the open interval (0, 1).
    double uniform() {
        double u;
        do {
            u = std::generate_canonical<double, 53>(engine_);
        } while (u <= 0.0 || u >= 1.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

    double exponential() { return -std::log(uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

    double gamma(double shape) {
        std::gamma_distribution<double> g(shape, 1.0);
        return g(engine_);
    }

    /// Symmetric-or-not Dirichlet draw; components are floored at the
    /// smallest normal double so the result stays strictly inside the simplex.
    std::vector<double> dirichlet(std::span<const double> alpha);

    /// Index drawn with probability proportional to exp(log_weights[k]).
    std::size_t categorical_log(std::span<const double> log_weights);

    /// Index drawn with probability weights[k] (must sum to ~1).
    std::size_t categorical(std::span<const double> weights);

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace icedist
