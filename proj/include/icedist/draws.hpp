#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icedist/mixture.hpp"
#include "icedist/model.hpp"

namespace icedist {

/// Column layout of a flattened parameter draw:
///   beta_0, beta_<confounder>..., p_1..K, mu_1..K, tau_1..K,
///   then `sigma` (one residual component) or pt_/mut_/taut_1..Kr,
///   then hetsd_<confounder>...
struct ParameterLayout {
    std::size_t n_beta = 1;
    std::size_t k_effect = 1;
    std::size_t k_residual = 1;
    std::size_t n_het = 0;
    std::vector<std::string> beta_names;
    std::vector<std::string> het_names;

    std::size_t beta(std::size_t i) const { return i; }
    std::size_t weight(std::size_t k) const { return n_beta + k; }
    std::size_t mean(std::size_t k) const { return n_beta + k_effect + k; }
    std::size_t sd(std::size_t k) const { return n_beta + 2 * k_effect + k; }
    std::size_t residual_base() const { return n_beta + 3 * k_effect; }
    std::size_t res_weight(std::size_t m) const;
    std::size_t res_mean(std::size_t m) const;
    std::size_t res_sd(std::size_t m) const;
    std::size_t het_sd(std::size_t j) const { return residual_base() + residual_width() + j; }
    std::size_t residual_width() const { return k_residual == 1 ? 1 : 3 * k_residual; }
    std::size_t size() const { return residual_base() + residual_width() + n_het; }

    std::vector<std::string> names() const;

    static ParameterLayout make(std::vector<std::string> confounders, const ModelSpec& model);
};

struct ChainDraws {
    Eigen::MatrixXd params;                // retained x layout.size()
    Eigen::MatrixXd z1;                    // stored iterations x individuals
    std::vector<long> z1_rows;             // retained index of each stored z1 row
    std::size_t rejected_residual_proposals = 0;
};

/// Thinned multi-chain output of the sampler.
struct PosteriorDraws {
    ParameterLayout layout;
    ModelSpec model;
    PriorSpec prior;
    ChainConfig config;
    std::vector<ChainDraws> chains;

    std::size_t n_chains() const { return chains.size(); }
    std::size_t retained_per_chain() const;
    std::size_t n_individuals() const;

    GaussianMixture effect_mixture(std::size_t chain, Eigen::Index row) const;
    GaussianMixture residual_mixture(std::size_t chain, Eigen::Index row) const;

    /// One column of the parameter matrix, per chain.
    std::vector<std::vector<double>> column(std::size_t index) const;
    std::vector<std::vector<double>> column(const std::string& name) const;

    /// Every stored z1 value across chains and iterations.
    std::vector<double> pooled_z1() const;

    /// Checks simplexes, positive scales and retained counts.
    void validate() const;
};

}  // namespace icedist
