#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icedist/csv.hpp"
#include "icedist/dataset.hpp"
#include "icedist/json.hpp"

namespace icedist {

/// Per-arm sample moments (variances with denominator n-1).
struct ArmMoments {
    std::string stratum = "all";
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    double mean1 = 0.0;
    double mean0 = 0.0;
    double var1 = 0.0;
    double var0 = 0.0;
};

/// Assignment of individuals to strata; code -1 leaves an individual out.
struct Stratification {
    std::vector<std::string> labels;
    std::vector<int> codes;

    /// One stratum holding everybody.
    static Stratification constant(std::size_t n);
};

/// Cross-classification by the named confounders. Columns with at most
/// `max_levels` distinct values are used level by level, others are
/// dichotomized at the median.
Stratification stratify(const Dataset& ds, const std::vector<std::string>& names, std::size_t max_levels = 10);

ArmMoments arm_moments(const Dataset& ds);
/// Throws std::invalid_argument naming any stratum with an arm below 2.
std::vector<ArmMoments> arm_moments(const Dataset& ds, const Stratification& strata);

struct HeterogeneityTest {
    std::string stratum;
    double variance_ratio = 1.0;
    double p_value = 1.0;             // two-sided F test
    double p_value_one_sided = 0.5;   // H1: var1 > var0
    bool flag = false;                // one-sided p < 0.05
};

HeterogeneityTest heterogeneity_test(const ArmMoments& mom);

struct HeterogeneityReport {
    HeterogeneityTest overall;
    std::vector<HeterogeneityTest> strata;
};

HeterogeneityReport heterogeneity_test(const Dataset& ds, const std::optional<Stratification>& strata = {});

/// (sqrt(var1) - sqrt(var0))^2, the smallest ICE variance compatible with
/// the two marginal variances.
double cs_lower_bound(double var1, double var0);

/// var1 - var0: ICE variance when the effect is independent of Y^0.
double additive_ice_variance(const ArmMoments& mom);

/// ICE variance when Y^1 = Y^0 U with U independent of Y^0:
/// var1 + (1 - 2 mean1/mean0) var0.
double multiplicative_ice_variance(const ArmMoments& mom);

struct VarianceRow {
    ArmMoments moments;
    HeterogeneityTest test;
    double lower_bound = 0.0;
    double additive = 0.0;
    bool additive_negative = false;
    std::optional<double> multiplicative;  // absent when mean0 is ~0
};

struct VarianceReport {
    VarianceRow overall;
    std::vector<VarianceRow> strata;
};

VarianceReport variance_report(const Dataset& ds, const std::optional<Stratification>& strata = {});
Json variance_report_to_json(const VarianceReport& report);

/// Lower-bound surface over var0 in [0, var0_max] and var1 - var0 in
/// [0, diff_max], `steps` points per axis.
CsvTable lower_bound_grid(double var0_max, double diff_max, std::size_t steps);

}  // namespace icedist
