#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "icedist/dataset.hpp"
#include "icedist/json.hpp"
#include "icedist/mixture.hpp"
#include "icedist/rng.hpp"

namespace icedist {

struct DiscreteLaw {
    std::vector<double> support;
    std::vector<double> probs;
};

struct NormalLaw {
    double mean = 0.0;
    double sd = 1.0;
};

using ConfounderLaw = std::variant<DiscreteLaw, NormalLaw>;

struct GaussianEffect {
    double mean = 0.0;
    double sd = 1.0;
};

/// Log-normal(mu, sigma) shifted so that its mean equals target_mean.
struct ShiftedLogNormalEffect {
    double mu = 0.0;
    double sigma = 1.0;
    double target_mean = 0.0;

    double shift() const;
};

struct TwoGaussianMixtureEffect {
    double p = 0.5;
    double mu1 = 0.0;
    double sd1 = 1.0;
    double mu2 = 0.0;
    double sd2 = 1.0;
};

using EffectFamily = std::variant<GaussianEffect, ShiftedLogNormalEffect, TwoGaussianMixtureEffect>;

/// Individual-level extra noise N(0, sd^2) added to the outcome of every
/// individual whose confounder value exceeds `threshold` (confounding-effect
/// heterogeneity).
struct HeterogeneityTerm {
    std::size_t confounder = 0;
    double threshold = 0.0;
    double sd = 0.0;
};

/// Generative specification of
///   A = 1{expit(alpha0 + L alpha_L) > N_A},
///   Y^a = beta0 + L beta_L + a U + N_Y (+ heterogeneity terms).
struct ScmConfig {
    double beta0 = 0.0;
    std::vector<double> beta_l;
    std::vector<ConfounderLaw> confounder_laws;
    std::vector<std::string> confounder_names;
    double alpha0 = 0.0;
    std::vector<double> alpha_l;
    double sigma = 1.0;
    EffectFamily effect = GaussianEffect{};
    /// Replaces N(0, sigma^2) as the law of N_Y when present.
    std::optional<GaussianMixture> residual;
    std::vector<HeterogeneityTerm> heterogeneity;

    std::size_t n_confounders() const { return confounder_laws.size(); }
    void validate() const;
};

/// Unobservable per-individual quantities; kept apart from the analysis data.
struct HiddenTruth {
    std::vector<double> u;
    std::vector<double> y0;
    std::vector<double> y1;
};

struct Simulation {
    Dataset data;
    HiddenTruth truth;
};

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Individuals are generated in fixed-size blocks, block b drawing from
/// rng.split(b); the result depends only on (cfg, n, rng seed).
inline constexpr std::size_t kSimulationBlock = 4096;

/// Serial reference simulator.
Simulation simulate_serial(const ScmConfig& cfg, std::size_t n, const Rng& rng);

/// OpenMP-parallel simulator; byte-identical to simulate_serial.
Simulation simulate(const ScmConfig& cfg, std::size_t n, const Rng& rng);

/// Exact law of the individual effect U.
class IceLaw {
public:
    explicit IceLaw(EffectFamily family);

    double cdf(double y) const;
    double quantile(double q) const;
    double mean() const;
    double sample(Rng& rng) const;
    const EffectFamily& family() const { return family_; }

private:
    EffectFamily family_;
};

IceLaw true_ice_law(const ScmConfig& cfg);

double sample_effect(const EffectFamily& family, Rng& rng);

/// Built-in configurations: fig3-gaussian, fig3-lognormal, fig3-mixture.
ScmConfig scm_preset(std::string_view name);
std::vector<std::string> scm_preset_names();

Json scm_to_json(const ScmConfig& cfg);
/// Throws std::invalid_argument naming the offending field path.
ScmConfig scm_from_json(const Json& j);

void write_truth_csv(const HiddenTruth& truth, const std::filesystem::path& path);

}  // namespace icedist
