#include "icedist/draws.hpp"

#include <cmath>
#include <stdexcept>

namespace icedist {

std::size_t ParameterLayout::res_weight(std::size_t m) const {
    if (k_residual == 1) throw std::logic_error("single-component residual has no weight column");
    return residual_base() + m;
}

std::size_t ParameterLayout::res_mean(std::size_t m) const {
    if (k_residual == 1) throw std::logic_error("single-component residual has no mean column");
    return residual_base() + k_residual + m;
}

std::size_t ParameterLayout::res_sd(std::size_t m) const {
    return k_residual == 1 ? residual_base() : residual_base() + 2 * k_residual + m;
}

std::vector<std::string> ParameterLayout::names() const {
    std::vector<std::string> out = beta_names;
    for (std::size_t k = 0; k < k_effect; ++k) out.push_back("p_" + std::to_string(k + 1));
    for (std::size_t k = 0; k < k_effect; ++k) out.push_back("mu_" + std::to_string(k + 1));
    for (std::size_t k = 0; k < k_effect; ++k) out.push_back("tau_" + std::to_string(k + 1));
    if (k_residual == 1) {
        out.push_back("sigma");
    } else {
        for (std::size_t m = 0; m < k_residual; ++m) out.push_back("pt_" + std::to_string(m + 1));
        for (std::size_t m = 0; m < k_residual; ++m) out.push_back("mut_" + std::to_string(m + 1));
        for (std::size_t m = 0; m < k_residual; ++m) out.push_back("taut_" + std::to_string(m + 1));
    }
    for (const auto& h : het_names) out.push_back("hetsd_" + h);
    return out;
}

ParameterLayout ParameterLayout::make(std::vector<std::string> confounders, const ModelSpec& model) {
    ParameterLayout l;
    l.beta_names.push_back("beta_0");
    for (const auto& c : confounders) l.beta_names.push_back("beta_" + c);
    l.n_beta = l.beta_names.size();
    l.k_effect = static_cast<std::size_t>(model.effect_components());
    l.k_residual = static_cast<std::size_t>(model.residual_components());
    l.het_names = model.het_confounders;
    l.n_het = l.het_names.size();
    return l;
}

std::size_t PosteriorDraws::retained_per_chain() const {
    return chains.empty() ? 0 : static_cast<std::size_t>(chains.front().params.rows());
}

std::size_t PosteriorDraws::n_individuals() const {
    return chains.empty() ? 0 : static_cast<std::size_t>(chains.front().z1.cols());
}

GaussianMixture PosteriorDraws::effect_mixture(std::size_t chain, Eigen::Index row) const {
    const auto& p = chains.at(chain).params;
    std::vector<double> w(layout.k_effect), mu(layout.k_effect), tau(layout.k_effect);
    double total = 0.0;
    for (std::size_t k = 0; k < layout.k_effect; ++k) {
        w[k] = p(row, static_cast<Eigen::Index>(layout.weight(k)));
        mu[k] = p(row, static_cast<Eigen::Index>(layout.mean(k)));
        tau[k] = p(row, static_cast<Eigen::Index>(layout.sd(k)));
        total += w[k];
    }
    // Draws read back from text are renormalised against rounding drift.
    for (double& v : w) v /= total;
    return GaussianMixture(std::move(w), std::move(mu), std::move(tau));
}

GaussianMixture PosteriorDraws::residual_mixture(std::size_t chain, Eigen::Index row) const {
    const auto& p = chains.at(chain).params;
    if (layout.k_residual == 1) {
        return GaussianMixture::single(0.0, p(row, static_cast<Eigen::Index>(layout.res_sd(0))));
    }
    std::vector<double> w(layout.k_residual), mu(layout.k_residual), tau(layout.k_residual);
    double total = 0.0;
    for (std::size_t m = 0; m < layout.k_residual; ++m) {
        w[m] = p(row, static_cast<Eigen::Index>(layout.res_weight(m)));
        mu[m] = p(row, static_cast<Eigen::Index>(layout.res_mean(m)));
        tau[m] = p(row, static_cast<Eigen::Index>(layout.res_sd(m)));
        total += w[m];
    }
    for (double& v : w) v /= total;
    return GaussianMixture(std::move(w), std::move(mu), std::move(tau));
}

std::vector<std::vector<double>> PosteriorDraws::column(std::size_t index) const {
    std::vector<std::vector<double>> out;
    for (const auto& c : chains) {
        const auto col = c.params.col(static_cast<Eigen::Index>(index));
        out.emplace_back(col.data(), col.data() + col.size());
    }
    return out;
}

std::vector<std::vector<double>> PosteriorDraws::column(const std::string& name) const {
    const auto names = layout.names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return column(i);
    }
    throw std::out_of_range("no posterior column named '" + name + "'");
}

std::vector<double> PosteriorDraws::pooled_z1() const {
    std::vector<double> out;
    for (const auto& c : chains) {
        out.insert(out.end(), c.z1.data(), c.z1.data() + c.z1.size());
    }
    return out;
}

void PosteriorDraws::validate() const {
    const auto expected = static_cast<Eigen::Index>(config.retained());
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto& p = chains[c].params;
        if (p.rows() != expected) {
            throw std::logic_error("chain " + std::to_string(c) + " retained " + std::to_string(p.rows()) +
                                   " draws, expected " + std::to_string(expected));
        }
        if (p.cols() != static_cast<Eigen::Index>(layout.size())) {
            throw std::logic_error("chain " + std::to_string(c) + " has the wrong number of columns");
        }
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            // Constructing the mixtures checks the simplex and sd invariants.
            (void)effect_mixture(c, r);
            (void)residual_mixture(c, r);
            for (std::size_t j = 0; j < layout.n_het; ++j) {
                if (!(p(r, static_cast<Eigen::Index>(layout.het_sd(j))) > 0.0)) {
                    throw std::logic_error("non-positive heterogeneity sd in chain " + std::to_string(c));
                }
            }
        }
    }
}

}  // namespace icedist
