#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace icedist {

enum class ModelKind {
    GaussianLmm,             // Gaussian random exposure effect, Gaussian residual
    MixtureLmm,              // Gaussian-mixture effect, Gaussian residual
    MixtureLmmFlexResidual,  // Gaussian-mixture effect, zero-mean mixture residual
    MixtureLmmConfHet,       // as above plus dichotomized-confounder random effects
};

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct ModelSpec {
    ModelKind kind = ModelKind::MixtureLmm;
    int k_effect = 5;
    int k_residual = 1;
    std::vector<std::string> het_confounders;

    /// Mixture sizes actually fitted: GaussianLmm forces one effect
    /// component, and only the flexible-residual kinds use k_residual.
    int effect_components() const;
    int residual_components() const;

    void validate() const;

    /// Case-study defaults for a kind (K_effect = 5, K_residual = 3 for the
    /// flexible-residual kinds).
    static ModelSpec defaults_for(ModelKind kind);
};

struct PriorSpec {
    double location_prior_var = 1e5;
    double scale_prior_upper = 100.0;
    double dirichlet_alpha = 0.5;

    void validate() const;
};

struct ChainConfig {
    int n_chains = 4;
    long n_burn = 10000;
    long n_iter = 50000;
    long thin = 10;
    std::uint64_t seed = 1;
    /// Flattened initial parameter vector in draw-column order.
    std::optional<std::vector<double>> init;
    /// Store the per-individual z1 vector on every z1_every-th retained
    /// iteration; 0 disables storage.
    long z1_every = 1;

    long retained() const { return n_iter / thin; }
    void validate() const;

    static ChainConfig desk_scale();
    static ChainConfig full_scale();
};

}  // namespace icedist
