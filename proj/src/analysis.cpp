#include "icedist/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <stdexcept>

#include "icedist/mcmc.hpp"
#include "icedist/lmm.hpp"
#include "icedist/stats.hpp"

namespace icedist {

namespace {

std::vector<GaussianMixture> chain_mixtures(const PosteriorDraws& draws, std::size_t chain) {
    std::vector<GaussianMixture> out;
    const auto rows = draws.chains.at(chain).params.rows();
    out.reserve(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) out.push_back(draws.effect_mixture(chain, r));
    return out;
}

int quantile_index(const std::string& q) {
    for (std::size_t k = 0; k < kIceQuantileProbs.size(); ++k) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "q%02d", static_cast<int>(std::lround(kIceQuantileProbs[k] * 100)));
        if (q == buf) return static_cast<int>(k);
    }
    return -1;
}

}  // namespace

std::vector<std::vector<double>> quantity_series(const PosteriorDraws& draws, const std::string& quantity) {
    const int qi = quantile_index(quantity);
    if (quantity != "ate" && quantity != "p_positive" && qi < 0) return draws.column(quantity);
    std::vector<std::vector<double>> out;
    for (std::size_t c = 0; c < draws.n_chains(); ++c) {
        const auto mixtures = chain_mixtures(draws, c);
        std::vector<double> probs;
        if (qi >= 0) probs.push_back(kIceQuantileProbs[static_cast<std::size_t>(qi)]);
        const auto sums = summarize_mixtures(mixtures, 0.0, probs);
        std::vector<double> series;
        series.reserve(sums.size());
        for (const auto& s : sums) {
            series.push_back(quantity == "ate" ? s.mean : quantity == "p_positive" ? 1.0 - s.cdf_at : s.quantiles[0]);
        }
        out.push_back(std::move(series));
    }
    return out;
}

Diagnostics diagnostics(const PosteriorDraws& draws, const std::string& quantity) {
    return diagnostics(quantity_series(draws, quantity), quantity);
}

std::vector<std::string> default_diagnostic_quantities(const PosteriorDraws& draws) {
    std::vector<std::string> out = draws.layout.beta_names;
    if (draws.layout.k_residual == 1) out.push_back("sigma");
    for (const auto& h : draws.layout.het_names) out.push_back("hetsd_" + h);
    for (const char* q : {"ate", "p_positive", "q05", "q25", "q50", "q75", "q95"}) out.emplace_back(q);
    return out;
}

// ---------------------------------------------------------------------------

Interval summarize_interval(std::span<const double> values, double level) {
    if (values.empty()) throw std::invalid_argument("interval: no values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double tail = 0.5 * (1.0 - level);
    return {mean_of(sorted), percentile_sorted(sorted, tail), percentile_sorted(sorted, 1.0 - tail)};
}

HarmDirection harm_direction_from_string(const std::string& s) {
    if (s == "positive") return HarmDirection::Positive;
    if (s == "negative") return HarmDirection::Negative;
    throw std::invalid_argument("harm_direction must be 'positive' or 'negative', got '" + s + "'");
}

MixtureFunctionals mixture_functionals(const PosteriorDraws& draws, HarmDirection harm, double level) {
    std::vector<GaussianMixture> all;
    for (std::size_t c = 0; c < draws.n_chains(); ++c) {
        auto m = chain_mixtures(draws, c);
        all.insert(all.end(), std::make_move_iterator(m.begin()), std::make_move_iterator(m.end()));
    }
    if (all.empty()) throw std::invalid_argument("mixture functionals: no retained draws");
    const auto sums = summarize_mixtures(all, 0.0, kIceQuantileProbs);
    std::vector<double> ate, pos, tbr;
    std::vector<std::vector<double>> q(kIceQuantileProbs.size());
    for (const auto& s : sums) {
        ate.push_back(s.mean);
        pos.push_back(1.0 - s.cdf_at);
        tbr.push_back(harm == HarmDirection::Positive ? s.cdf_at : 1.0 - s.cdf_at);
        for (std::size_t k = 0; k < q.size(); ++k) q[k].push_back(s.quantiles[k]);
    }
    MixtureFunctionals f;
    f.ate = summarize_interval(ate, level);
    f.p_positive = summarize_interval(pos, level);
    f.tbr = summarize_interval(tbr, level);
    f.probs = kIceQuantileProbs;
    for (const auto& v : q) f.quantiles.push_back(summarize_interval(v, level));
    f.iterations = all.size();
    return f;
}

IceSummary ice_distribution(const PosteriorDraws& draws, const IceOptions& opt) {
    IceSummary s;
    s.harm = opt.harm;
    s.functionals = mixture_functionals(draws, opt.harm, opt.level);
    const std::vector<double> pooled = draws.pooled_z1();
    if (pooled.empty()) throw std::invalid_argument("ice distribution: no stored z1 draws");
    s.pooled_draws = pooled.size();
    s.pooled_mean = mean_of(pooled);
    s.bandwidth = silverman_bandwidth(pooled);
    s.grid = kde_grid(pooled, s.bandwidth, opt.grid_points);
    s.density = kde_cell(pooled, s.bandwidth, s.grid);

    std::vector<std::pair<std::size_t, Eigen::Index>> rows;
    for (std::size_t c = 0; c < draws.n_chains(); ++c) {
        for (Eigen::Index r = 0; r < draws.chains[c].z1.rows(); ++r) rows.emplace_back(c, r);
    }
    const std::size_t curves_n = std::min(rows.size(), std::max<std::size_t>(opt.max_band_curves, 1));
    Eigen::MatrixXd curves(static_cast<Eigen::Index>(curves_n), static_cast<Eigen::Index>(s.grid.size()));
    const auto count = static_cast<long>(curves_n);
#pragma omp parallel for schedule(dynamic, 4)
    for (long k = 0; k < count; ++k) {
        const auto& [c, r] = rows[static_cast<std::size_t>(k) * rows.size() / curves_n];
        const auto z = draws.chains[c].z1.row(r);
        const std::vector<double> v(z.data(), z.data() + z.size());
        const auto one = kde_cell(v, v.size() >= 2 ? silverman_bandwidth(v) : s.bandwidth, s.grid);
        for (std::size_t g = 0; g < one.size(); ++g) curves(k, static_cast<Eigen::Index>(g)) = one[g];
    }
    const double tail = 0.5 * (1.0 - opt.level);
    const Band band = pointwise_band(curves, tail, 1.0 - tail);
    s.lo = band.lo;
    s.hi = band.hi;
    return s;
}

namespace {

Json interval_json(const Interval& i) { return Json{{"mean", i.mean}, {"lo", i.lo}, {"hi", i.hi}}; }

}  // namespace

Json ice_summary_to_json(const IceSummary& s) {
    Json j;
    j["ate"] = interval_json(s.functionals.ate);
    j["p_positive"] = interval_json(s.functionals.p_positive);
    j["tbr"] = interval_json(s.functionals.tbr);
    j["harm_direction"] = s.harm == HarmDirection::Positive ? "positive" : "negative";
    Json q = Json::array();
    for (std::size_t k = 0; k < s.functionals.probs.size(); ++k) {
        Json e = interval_json(s.functionals.quantiles[k]);
        e["prob"] = s.functionals.probs[k];
        q.push_back(std::move(e));
    }
    j["quantiles"] = std::move(q);
    j["iterations"] = s.functionals.iterations;
    j["pooled_draws"] = s.pooled_draws;
    j["pooled_mean"] = s.pooled_mean;
    j["kde"] = Json{{"kernel", "gaussian"},
                    {"bandwidth_rule", "silverman 0.9*min(sd, IQR/1.34)*n^(-1/5)"},
                    {"evaluation", "cell average over each grid step"},
                    {"bandwidth", s.bandwidth},
                    {"grid_points", s.grid.size()},
                    {"integral", trapezoid(s.grid, s.density)}};
    return j;
}

CsvTable ice_density_table(const IceSummary& s) {
    CsvTable t;
    t.header = {"y", "density", "lo", "hi"};
    for (std::size_t g = 0; g < s.grid.size(); ++g) t.rows.push_back({s.grid[g], s.density[g], s.lo[g], s.hi[g]});
    return t;
}

// ---------------------------------------------------------------------------

PpcResult posterior_predictive_check(const PosteriorDraws& draws, const Dataset& ds, const PpcOptions& opt) {
    ds.validate();
    const ModelData md = ModelData::make(ds, draws.model);
    if (static_cast<std::size_t>(md.x.cols()) != draws.layout.n_beta) {
        throw std::invalid_argument("ppc: dataset confounders do not match the fitted model");
    }
    PpcResult res;

    struct Group {
        std::string label;
        std::vector<std::size_t> members;
    };
    std::vector<Group> groups;
    for (int arm : {1, 0}) {
        const std::string base = "a=" + std::to_string(arm);
        Group all{base, {}};
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.a[static_cast<Eigen::Index>(i)] == arm) all.members.push_back(i);
        }
        groups.push_back(std::move(all));
        for (const auto& name : opt.confounders) {
            const Dichotomized dz = dichotomize(ds, name);
            for (int level : {1, 0}) {
                Group g{base + "," + dz.label + "=" + std::to_string(level), {}};
                for (std::size_t i = 0; i < ds.size(); ++i) {
                    const auto r = static_cast<Eigen::Index>(i);
                    if (ds.a[r] == arm && static_cast<int>(dz.indicator[r]) == level) g.members.push_back(i);
                }
                groups.push_back(std::move(g));
            }
        }
    }
    std::vector<Group> kept;
    for (auto& g : groups) {
        if (g.members.size() < opt.min_stratum) {
            res.warnings.push_back("stratum " + g.label + " has " + std::to_string(g.members.size()) +
                                   " observations; skipped");
        } else {
            kept.push_back(std::move(g));
        }
    }

    std::vector<std::pair<std::size_t, Eigen::Index>> iters;
    for (std::size_t c = 0; c < draws.n_chains(); ++c) {
        for (Eigen::Index r = 0; r < draws.chains[c].params.rows(); ++r) iters.emplace_back(c, r);
    }
    if (iters.empty()) throw std::invalid_argument("ppc: no retained draws");
    const std::size_t reps = opt.replicates == 0 ? iters.size() : std::min(opt.replicates, iters.size());
    res.replicates = reps;

    for (const auto& g : kept) {
        PpcStratum s;
        s.label = g.label;
        s.n = g.members.size();
        std::vector<double> obs;
        for (std::size_t i : g.members) obs.push_back(ds.y[static_cast<Eigen::Index>(i)]);
        s.bandwidth = silverman_bandwidth(obs);
        s.grid = kde_grid(obs, s.bandwidth, opt.grid_points);
        s.observed = kde(obs, s.bandwidth, s.grid);
        res.strata.push_back(std::move(s));
    }
    std::vector<Eigen::MatrixXd> curves(kept.size());
    for (auto& m : curves) m.resize(static_cast<Eigen::Index>(reps), static_cast<Eigen::Index>(opt.grid_points));

    const ParameterLayout& lay = draws.layout;
    const auto count = static_cast<long>(reps);
#pragma omp parallel for schedule(dynamic, 4)
    for (long k = 0; k < count; ++k) {
        const auto [c, row] = iters[static_cast<std::size_t>(k) * iters.size() / reps];
        Rng rng = Rng(opt.seed).split(static_cast<std::uint64_t>(k));
        const auto& p = draws.chains[c].params;
        const GaussianMixture effect = draws.effect_mixture(c, row);
        const GaussianMixture resid = draws.residual_mixture(c, row);
        Eigen::VectorXd beta(static_cast<Eigen::Index>(lay.n_beta));
        for (std::size_t b = 0; b < lay.n_beta; ++b) beta[static_cast<Eigen::Index>(b)] = p(row, static_cast<Eigen::Index>(lay.beta(b)));
        std::vector<double> yrep(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            double y = md.x.row(r).dot(beta);
            if (ds.a[r] == 1) y += effect.sample(rng);
            for (std::size_t j = 0; j < lay.n_het; ++j) {
                if (md.h(r, static_cast<Eigen::Index>(j)) > 0.5) {
                    y += rng.normal(0.0, p(row, static_cast<Eigen::Index>(lay.het_sd(j))));
                }
            }
            yrep[i] = y + resid.sample(rng);
        }
        for (std::size_t s = 0; s < kept.size(); ++s) {
            std::vector<double> v;
            v.reserve(kept[s].members.size());
            for (std::size_t i : kept[s].members) v.push_back(yrep[i]);
            const auto dens = kde(v, res.strata[s].bandwidth, res.strata[s].grid);
            for (std::size_t g = 0; g < dens.size(); ++g) curves[s](k, static_cast<Eigen::Index>(g)) = dens[g];
        }
    }

    for (std::size_t s = 0; s < kept.size(); ++s) {
        const Band band = pointwise_band(curves[s], 0.025, 0.975);
        auto& st = res.strata[s];
        st.predictive_mean = band.mean;
        st.lo = band.lo;
        st.hi = band.hi;
        std::size_t inside = 0;
        for (std::size_t g = 0; g < st.grid.size(); ++g) {
            if (st.observed[g] >= st.lo[g] && st.observed[g] <= st.hi[g]) ++inside;
        }
        st.fraction_inside = static_cast<double>(inside) / static_cast<double>(st.grid.size());
    }
    return res;
}

Json ppc_to_json(const PpcResult& r) {
    Json j;
    j["replicates"] = r.replicates;
    Json strata = Json::array();
    for (const auto& s : r.strata) {
        strata.push_back(Json{{"stratum", s.label},
                              {"n", s.n},
                              {"bandwidth", s.bandwidth},
                              {"fraction_inside", s.fraction_inside}});
    }
    j["strata"] = std::move(strata);
    j["warnings"] = r.warnings;
    return j;
}

TextTable ppc_table(const PpcResult& r) {
    TextTable t;
    t.header = {"stratum", "y", "observed", "predictive_mean", "lo", "hi"};
    for (const auto& st : r.strata) {
        for (std::size_t g = 0; g < st.grid.size(); ++g) {
            t.rows.push_back({st.label, format_double(st.grid[g]), format_double(st.observed[g]),
                              format_double(st.predictive_mean[g]), format_double(st.lo[g]),
                              format_double(st.hi[g])});
        }
    }
    return t;
}

// ---------------------------------------------------------------------------

CoverageTable coverage_study(const ScmConfig& cfg, const CoverageOptions& opt) {
    if (opt.replicates < 2) throw std::invalid_argument("coverage study: need at least 2 replicates");
    const IceLaw law = true_ice_law(cfg);
    std::vector<std::string> names{"P(ICE>0)"};
    std::vector<double> truth{1.0 - law.cdf(0.0)};
    for (double q : kIceQuantileProbs) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "q%02d", static_cast<int>(std::lround(q * 100)));
        names.emplace_back(buf);
        truth.push_back(law.quantile(q));
    }

    CoverageTable t;
    t.replicates.resize(opt.replicates);
    const Rng master(opt.seed);
    const auto count = static_cast<long>(opt.replicates);
#pragma omp parallel for schedule(dynamic, 1)
    for (long s = 0; s < count; ++s) {
        const auto us = static_cast<std::size_t>(s);
        ReplicateResult& rr = t.replicates[us];
        rr.index = us;
        try {
            const Rng rep = master.split(us);
            const Simulation sim = simulate_serial(cfg, opt.n, rep.split(0));
            ChainConfig cc = opt.chains;
            cc.seed = rep.split(1).seed();
            cc.z1_every = 0;
            const PosteriorDraws draws = run_chains_serial(sim.data, opt.model, opt.prior, cc);
            const MixtureFunctionals f = mixture_functionals(draws);
            rr.intervals.push_back(f.p_positive);
            rr.intervals.insert(rr.intervals.end(), f.quantiles.begin(), f.quantiles.end());
            rr.ok = true;
        } catch (const std::exception& e) {
            rr.error = e.what();
        }
    }

    for (std::size_t q = 0; q < names.size(); ++q) {
        CoverageRow row;
        row.quantity = names[q];
        row.truth = truth[q];
        std::vector<double> means;
        double covered = 0.0;
        for (const auto& rr : t.replicates) {
            if (!rr.ok) continue;
            const Interval& iv = rr.intervals[q];
            means.push_back(iv.mean);
            covered += (iv.lo <= truth[q] && truth[q] <= iv.hi) ? 1.0 : 0.0;
        }
        row.replicates = means.size();
        if (!means.empty()) {
            const double s = static_cast<double>(means.size());
            row.mean_estimate = mean_of(means);
            row.mean_estimate_se = means.size() > 1 ? sd_of(means) / std::sqrt(s) : 0.0;
            row.coverage = covered / s;
            row.coverage_se = std::sqrt(row.coverage * (1.0 - row.coverage) / s);
        }
        t.rows.push_back(row);
    }
    for (const auto& rr : t.replicates) t.failures += rr.ok ? 0 : 1;
    return t;
}

TextTable coverage_csv(const CoverageTable& t) {
    TextTable out;
    out.header = {"quantity", "truth", "mean_estimate", "mean_estimate_se", "coverage", "coverage_se", "replicates"};
    for (const auto& r : t.rows) {
        out.rows.push_back({r.quantity, format_double(r.truth), format_double(r.mean_estimate),
                            format_double(r.mean_estimate_se), format_double(r.coverage),
                            format_double(r.coverage_se), std::to_string(r.replicates)});
    }
    return out;
}

Json coverage_to_json(const CoverageTable& t) {
    Json j;
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        rows.push_back(Json{{"quantity", r.quantity},
                            {"truth", r.truth},
                            {"mean_estimate", r.mean_estimate},
                            {"mean_estimate_se", r.mean_estimate_se},
                            {"coverage", r.coverage},
                            {"coverage_se", r.coverage_se},
                            {"replicates", r.replicates}});
    }
    j["rows"] = std::move(rows);
    j["failures"] = t.failures;
    Json errs = Json::array();
    for (const auto& rr : t.replicates) {
        if (!rr.ok) errs.push_back(Json{{"replicate", rr.index}, {"error", rr.error}});
    }
    j["errors"] = std::move(errs);
    return j;
}

}  // namespace icedist
