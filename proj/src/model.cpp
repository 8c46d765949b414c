#include "icedist/model.hpp"

#include <stdexcept>

namespace icedist {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::GaussianLmm: return "GaussianLMM";
        case ModelKind::MixtureLmm: return "MixtureLMM";
        case ModelKind::MixtureLmmFlexResidual: return "MixtureLMM_FlexResidual";
        case ModelKind::MixtureLmmConfHet: return "MixtureLMM_ConfHet";
    }
    return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
    for (auto k : {ModelKind::GaussianLmm, ModelKind::MixtureLmm, ModelKind::MixtureLmmFlexResidual,
                   ModelKind::MixtureLmmConfHet}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown model kind '" + std::string(name) +
                                "' (expected GaussianLMM, MixtureLMM, MixtureLMM_FlexResidual or MixtureLMM_ConfHet)");
}

int ModelSpec::effect_components() const { return kind == ModelKind::GaussianLmm ? 1 : k_effect; }

int ModelSpec::residual_components() const {
    return (kind == ModelKind::MixtureLmmFlexResidual || kind == ModelKind::MixtureLmmConfHet) ? k_residual : 1;
}

void ModelSpec::validate() const {
    if (k_effect < 1) throw std::invalid_argument("model: K_effect must be >= 1");
    if (k_residual < 1) throw std::invalid_argument("model: K_residual must be >= 1");
    const bool het = kind == ModelKind::MixtureLmmConfHet;
    if (het && het_confounders.empty()) {
        throw std::invalid_argument("model: MixtureLMM_ConfHet needs at least one het confounder");
    }
    if (!het && !het_confounders.empty()) {
        throw std::invalid_argument("model: het confounders are only allowed with MixtureLMM_ConfHet");
    }
}

ModelSpec ModelSpec::defaults_for(ModelKind kind) {
    ModelSpec m;
    m.kind = kind;
    m.k_effect = kind == ModelKind::GaussianLmm ? 1 : 5;
    m.k_residual =
        (kind == ModelKind::MixtureLmmFlexResidual || kind == ModelKind::MixtureLmmConfHet) ? 3 : 1;
    return m;
}

void PriorSpec::validate() const {
    if (!(location_prior_var > 0.0)) throw std::invalid_argument("prior: location_prior_var must be > 0");
    if (!(scale_prior_upper > 0.0)) throw std::invalid_argument("prior: scale_prior_upper must be > 0");
    if (!(dirichlet_alpha > 0.0)) throw std::invalid_argument("prior: dirichlet_alpha must be > 0");
}

void ChainConfig::validate() const {
    if (n_chains < 1) throw std::invalid_argument("chains: n_chains must be >= 1");
    if (n_burn < 0) throw std::invalid_argument("chains: n_burn must be >= 0");
    if (n_iter < 1) throw std::invalid_argument("chains: n_iter must be >= 1");
    if (thin < 1) throw std::invalid_argument("chains: thin must be >= 1");
    if (n_iter % thin != 0) throw std::invalid_argument("chains: thin must divide n_iter");
    if (z1_every < 0) throw std::invalid_argument("chains: z1_every must be >= 0");
}

ChainConfig ChainConfig::desk_scale() { return ChainConfig{}; }

ChainConfig ChainConfig::full_scale() {
    ChainConfig c;
    c.n_burn = 100000;
    c.n_iter = 500000;
    c.thin = 100;
    return c;
}

}  // namespace icedist
