#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icedist/csv.hpp"
#include "icedist/dataset.hpp"
#include "icedist/draws.hpp"
#include "icedist/json.hpp"
#include "icedist/kernels.hpp"
#include "icedist/model.hpp"
#include "icedist/scm.hpp"

namespace icedist {

// ---- convergence diagnostics ----------------------------------------------

struct Diagnostics {
    std::string quantity;
    double rhat = 1.0;
    double ess_bulk = 0.0;
    double ess_tail = 0.0;
    bool degenerate = false;  // constant draws: every value NaN
    bool duplicated = false;  // two split halves are identical sequences
    std::string note;
};

/// Rank-normalized split-R-hat (max of bulk and folded) with bulk and tail
/// ESS. Needs at least 2 chains of 100 draws each.
Diagnostics diagnostics(const std::vector<std::vector<double>>& chains, const std::string& quantity = "");

/// Per-iteration series of a named quantity: a draw column, or one of the
/// label-invariant functionals "ate", "p_positive", "q05", "q25", "q50",
/// "q75", "q95".
std::vector<std::vector<double>> quantity_series(const PosteriorDraws& draws, const std::string& quantity);

Diagnostics diagnostics(const PosteriorDraws& draws, const std::string& quantity);

/// Quantities whose diagnostics are meaningful under label switching:
/// fixed effects, residual scale when single, het sds and the functionals.
std::vector<std::string> default_diagnostic_quantities(const PosteriorDraws& draws);

Json diagnostics_to_json(const Diagnostics& d);

// ---- ICE distribution ------------------------------------------------------

struct Interval {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

Interval summarize_interval(std::span<const double> values, double level = 0.95);

enum class HarmDirection { Positive, Negative };

HarmDirection harm_direction_from_string(const std::string& s);

inline const std::vector<double> kIceQuantileProbs{0.05, 0.25, 0.5, 0.75, 0.95};

/// Functionals of the per-iteration effect mixture, pooled over chains.
struct MixtureFunctionals {
    Interval ate;
    Interval p_positive;  // P(ICE > 0)
    Interval tbr;         // treatment benefit rate under the harm convention
    std::vector<double> probs;
    std::vector<Interval> quantiles;
    std::size_t iterations = 0;
};

MixtureFunctionals mixture_functionals(const PosteriorDraws& draws, HarmDirection harm = HarmDirection::Positive,
                                       double level = 0.95);

struct IceSummary {
    MixtureFunctionals functionals;
    double pooled_mean = 0.0;
    std::size_t pooled_draws = 0;
    double bandwidth = 0.0;
    std::vector<double> grid, density, lo, hi;
    HarmDirection harm = HarmDirection::Positive;
};

struct IceOptions {
    HarmDirection harm = HarmDirection::Positive;
    std::size_t grid_points = 512;
    double level = 0.95;
    std::size_t max_band_curves = 1000;
};

/// Pooled KDE of the stored z1 draws with a band from per-iteration KDEs,
/// plus the mixture functionals. Throws when no z1 draws are stored.
IceSummary ice_distribution(const PosteriorDraws& draws, const IceOptions& opt = {});

Json ice_summary_to_json(const IceSummary& s);
CsvTable ice_density_table(const IceSummary& s);

// ---- posterior predictive check ----------------------------------------------

struct PpcStratum {
    std::string label;
    std::size_t n = 0;
    double bandwidth = 0.0;
    std::vector<double> grid, observed, predictive_mean, lo, hi;
    double fraction_inside = 0.0;
};

struct PpcOptions {
    std::size_t replicates = 500;  // 0 = every retained iteration
    std::vector<std::string> confounders;
    std::uint64_t seed = 1;
    std::size_t grid_points = 512;
    std::size_t min_stratum = 10;
};

struct PpcResult {
    std::vector<PpcStratum> strata;
    std::vector<std::string> warnings;
    std::size_t replicates = 0;
};

/// Replicate outcome vectors at evenly spaced retained iterations, compared
/// with the observed outcomes per stratum (exposure arm, optionally crossed
/// with one dichotomized confounder at a time).
PpcResult posterior_predictive_check(const PosteriorDraws& draws, const Dataset& ds, const PpcOptions& opt = {});

Json ppc_to_json(const PpcResult& r);
TextTable ppc_table(const PpcResult& r);

// ---- coverage study ------------------------------------------------------------

struct CoverageRow {
    std::string quantity;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double mean_estimate_se = 0.0;
    double coverage = 0.0;
    double coverage_se = 0.0;
    std::size_t replicates = 0;
};

struct ReplicateResult {
    std::size_t index = 0;
    bool ok = false;
    std::string error;
    std::vector<Interval> intervals;  // p_positive then the quantiles
};

struct CoverageTable {
    std::vector<CoverageRow> rows;
    std::vector<ReplicateResult> replicates;
    std::size_t failures = 0;
};

struct CoverageOptions {
    std::size_t replicates = 20;
    std::size_t n = 1000;
    ModelSpec model = ModelSpec::defaults_for(ModelKind::MixtureLmm);
    PriorSpec prior;
    ChainConfig chains;
    std::uint64_t seed = 1;
};

/// Simulates, fits and scores independent replicates in parallel; replicate
/// s uses Rng(seed).split(s) for its data and a derived seed for its chains.
CoverageTable coverage_study(const ScmConfig& cfg, const CoverageOptions& opt);

TextTable coverage_csv(const CoverageTable& t);
Json coverage_to_json(const CoverageTable& t);

}  // namespace icedist
