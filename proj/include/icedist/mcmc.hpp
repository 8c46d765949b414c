#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "icedist/dataset.hpp"
#include "icedist/draws.hpp"
#include "icedist/model.hpp"
#include "icedist/rng.hpp"

namespace icedist {

/// Full sampler state: parameters plus the per-individual latents.
/// A Gaussian residual is the one-component case (pt = {1}, mut = {0},
/// taut = {sigma}).
struct AugmentedState {
    Eigen::VectorXd beta;
    std::vector<double> p, mu, tau;
    std::vector<double> pt, mut, taut;
    std::vector<double> het_sd;
    Eigen::VectorXd z1;        // used for exposed individuals only
    std::vector<int> c1;       // effect label, exposed individuals only
    std::vector<int> c0;       // residual label
    Eigen::MatrixXd zl;        // individuals x het confounders, used where the indicator is 1

    std::vector<double> flatten(const ParameterLayout& layout) const;
    /// Parameters from a flattened vector; latents are sized for n individuals
    /// and set to zero / label 0.
    static AugmentedState from_flat(const ParameterLayout& layout, const std::vector<double>& values, std::size_t n);
};

/// Design shared by the sampler and the density: fixed-effect design with
/// an intercept and every dataset confounder, and the dichotomized
/// indicators of the het confounders.
struct ModelData {
    Eigen::MatrixXd x;
    Eigen::MatrixXd h;
    std::vector<std::string> het_labels;
    const Dataset* ds = nullptr;

    static ModelData make(const Dataset& ds, const ModelSpec& model);
};

/// Joint log density of data, latents and parameters up to a constant;
/// -infinity outside the prior support.
double log_posterior(const AugmentedState& state, const ModelData& md, const ModelSpec& model,
                     const PriorSpec& prior);

/// Neal's stepping-out slice sampler for a univariate log density; points
/// above `upper` have zero density.
double slice_sample(double x0, const std::function<double(double)>& logf, double width, int max_steps,
                    double upper, Rng& rng);

/// Starting state from the ML Gaussian LMM (or a neutral state for an
/// empty dataset).
AugmentedState initial_state(const Dataset& ds, const ModelData& md, const ModelSpec& model,
                             const PriorSpec& prior);

/// Data-augmented Gibbs sampler; chains run in parallel, each seeded from
/// Rng(cc.seed).split(chain).
PosteriorDraws run_chains(const Dataset& ds, const ModelSpec& model, const PriorSpec& prior,
                          const ChainConfig& cc);

/// Same draws, chains run one after another.
PosteriorDraws run_chains_serial(const Dataset& ds, const ModelSpec& model, const PriorSpec& prior,
                                 const ChainConfig& cc);

}  // namespace icedist
