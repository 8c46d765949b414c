#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icedist/dataset.hpp"
#include "icedist/json.hpp"

namespace icedist {

/// Median split of one confounder. The indicator is 1 on the side whose
/// outcome sample variance is larger; values equal to the median get 0.
struct Dichotomized {
    Eigen::VectorXd indicator;
    double threshold = 0.0;
    bool above = true;       // indicator = 1{x > threshold} (else 1{x < threshold})
    bool was_binary = false; // 0/1 columns pass through untouched
    std::string label;
};

Dichotomized dichotomize(const Dataset& ds, const std::string& name);

struct LmmSpec {
    std::vector<std::string> fixed;  // confounders entering the mean
    std::vector<std::string> het;    // confounders receiving a dichotomized random effect
    bool fix_exposure_variance = false;  // pin the random exposure variance at zero
};

/// Maximum-likelihood fit of
///   y_i = beta0 + l_i beta_L + a_i theta + a_i w_i + sum_j h_ij v_ij + e_i,
/// whose marginal law is heteroscedastic regression with
///   var_i = var_resid + a_i var_z1 + sum_j h_ij var_het_j.
struct LmmFit {
    Eigen::VectorXd beta;  // intercept, fixed confounders, exposure mean effect
    std::vector<std::string> beta_names;
    double var_z1 = 0.0;
    std::vector<double> var_het;
    std::vector<std::string> het_labels;
    double var_resid = 0.0;
    double loglik = 0.0;
    Eigen::MatrixXd beta_cov;  // inverse Fisher information at the variances
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
    std::vector<double> loglik_trace;

    double exposure_effect() const { return beta(beta.size() - 1); }
};

inline constexpr double kVarianceFloor = 1e-10;

LmmFit fit_lmm(const Dataset& ds, const LmmSpec& spec, int max_iter = 500);

Json lmm_fit_to_json(const LmmFit& fit);

struct SelectionStep {
    std::string phase;      // "mean" or "variance"
    int round = 0;
    std::string candidate;
    double old_value = 0.0;  // E[Z1] (mean phase) or var(Z1) (variance phase), current model
    double new_value = 0.0;
    double relative_change = 0.0;
    std::string decision;    // "removed", "kept", "added", "not added"
};

struct SelectionResult {
    std::vector<std::string> selected;
    std::vector<SelectionStep> trace;
    LmmFit final_fit;
};

/// Two-phase selection: backward elimination on the relative change of
/// E[Z1], then forward addition of dichotomized random effects on the
/// relative change of var(Z1). Ties go to the earliest candidate.
SelectionResult select_confounders(const Dataset& ds, const std::vector<std::string>& candidates,
                                   double mean_threshold = 0.05, double var_threshold = 0.10);

Json selection_to_json(const SelectionResult& result);

}  // namespace icedist
