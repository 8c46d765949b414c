#include "icedist/scm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "icedist/csv.hpp"
#include "icedist/stats.hpp"

namespace icedist {

namespace jf = json_fields;

double ShiftedLogNormalEffect::shift() const { return target_mean - std::exp(mu + 0.5 * sigma * sigma); }

namespace {

void check_simplex(const std::vector<double>& probs, const std::string& where) {
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw std::invalid_argument(where + ": negative or NaN probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument(where + ": probabilities sum to " + std::to_string(total) + ", not 1");
    }
}

void check_effect(const EffectFamily& effect) {
    std::visit(
        [](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, GaussianEffect>) {
                if (!(e.sd > 0.0)) throw std::invalid_argument("effect: Gaussian sd must be > 0");
            } else if constexpr (std::is_same_v<T, ShiftedLogNormalEffect>) {
                if (!(e.sigma > 0.0)) throw std::invalid_argument("effect: log-normal sigma must be > 0");
            } else {
                if (!(e.p >= 0.0 && e.p <= 1.0)) throw std::invalid_argument("effect: mixture p must lie in [0,1]");
                if (!(e.sd1 > 0.0 && e.sd2 > 0.0)) throw std::invalid_argument("effect: mixture sds must be > 0");
            }
        },
        effect);
}

double draw_confounder(const ConfounderLaw& law, Rng& rng) {
    if (const auto* d = std::get_if<DiscreteLaw>(&law)) {
        return d->support[rng.categorical(d->probs)];
    }
    const auto& n = std::get<NormalLaw>(law);
    return rng.normal(n.mean, n.sd);
}

// Draw order per individual is fixed: L, exposure noise, U, N_Y, then the
// heterogeneity terms.
void simulate_block(const ScmConfig& cfg, std::size_t begin, std::size_t end, Rng rng, Simulation& sim) {
    const std::size_t p = cfg.n_confounders();
    for (std::size_t i = begin; i < end; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        double lin_y = cfg.beta0;
        double lin_a = cfg.alpha0;
        for (std::size_t j = 0; j < p; ++j) {
            const double v = draw_confounder(cfg.confounder_laws[j], rng);
            sim.data.l(row, static_cast<Eigen::Index>(j)) = v;
            lin_y += v * cfg.beta_l[j];
            lin_a += v * cfg.alpha_l[j];
        }
        const int a = rng.uniform() < expit(lin_a) ? 1 : 0;
        const double u = sample_effect(cfg.effect, rng);
        const double noise = cfg.residual ? cfg.residual->sample(rng) : rng.normal(0.0, cfg.sigma);
        double het = 0.0;
        for (const auto& h : cfg.heterogeneity) {
            if (sim.data.l(row, static_cast<Eigen::Index>(h.confounder)) > h.threshold) het += rng.normal(0.0, h.sd);
        }
        const double y0 = lin_y + noise + het;
        const double y1 = y0 + u;
        sim.data.a(row) = a;
        sim.data.y(row) = a == 1 ? y1 : y0;
        sim.truth.u[i] = u;
        sim.truth.y0[i] = y0;
        sim.truth.y1[i] = y1;
    }
}

Simulation allocate(const ScmConfig& cfg, std::size_t n) {
    cfg.validate();
    if (n == 0) throw std::invalid_argument("simulate: n must be >= 1");
    Simulation sim;
    const auto rows = static_cast<Eigen::Index>(n);
    sim.data.y.resize(rows);
    sim.data.a.resize(rows);
    sim.data.l.resize(rows, static_cast<Eigen::Index>(cfg.n_confounders()));
    sim.data.confounder_names = cfg.confounder_names;
    sim.truth.u.resize(n);
    sim.truth.y0.resize(n);
    sim.truth.y1.resize(n);
    return sim;
}

}  // namespace

void ScmConfig::validate() const {
    const std::size_t p = confounder_laws.size();
    if (beta_l.size() != p || alpha_l.size() != p || confounder_names.size() != p) {
        throw std::invalid_argument("scm: beta_l, alpha_l, confounder names and laws must have equal length");
    }
    for (std::size_t j = 0; j < p; ++j) {
        if (const auto* d = std::get_if<DiscreteLaw>(&confounder_laws[j])) {
            if (d->support.empty() || d->support.size() != d->probs.size()) {
                throw std::invalid_argument("scm: confounder " + confounder_names[j] +
                                            ": support and probs must be non-empty and equally long");
            }
            check_simplex(d->probs, "scm: confounder " + confounder_names[j]);
        } else if (!(std::get<NormalLaw>(confounder_laws[j]).sd > 0.0)) {
            throw std::invalid_argument("scm: confounder " + confounder_names[j] + ": sd must be > 0");
        }
    }
    if (!(sigma > 0.0)) throw std::invalid_argument("scm: sigma must be > 0");
    check_effect(effect);
    for (const auto& h : heterogeneity) {
        if (h.confounder >= p) throw std::invalid_argument("scm: heterogeneity term names a missing confounder");
        if (!(h.sd >= 0.0)) throw std::invalid_argument("scm: heterogeneity sd must be >= 0");
    }
}

Simulation simulate_serial(const ScmConfig& cfg, std::size_t n, const Rng& rng) {
    Simulation sim = allocate(cfg, n);
    const std::size_t blocks = (n + kSimulationBlock - 1) / kSimulationBlock;
    for (std::size_t b = 0; b < blocks; ++b) {
        simulate_block(cfg, b * kSimulationBlock, std::min(n, (b + 1) * kSimulationBlock), rng.split(b), sim);
    }
    return sim;
}

Simulation simulate(const ScmConfig& cfg, std::size_t n, const Rng& rng) {
    Simulation sim = allocate(cfg, n);
    const auto blocks = static_cast<long>((n + kSimulationBlock - 1) / kSimulationBlock);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < blocks; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        simulate_block(cfg, ub * kSimulationBlock, std::min(n, (ub + 1) * kSimulationBlock), rng.split(ub), sim);
    }
    return sim;
}

// ---------------------------------------------------------------------------

double sample_effect(const EffectFamily& family, Rng& rng) {
    return std::visit(
        [&rng](const auto& e) -> double {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, GaussianEffect>) {
                return rng.normal(e.mean, e.sd);
            } else if constexpr (std::is_same_v<T, ShiftedLogNormalEffect>) {
                return e.shift() + std::exp(rng.normal(e.mu, e.sigma));
            } else {
                return rng.uniform() < e.p ? rng.normal(e.mu1, e.sd1) : rng.normal(e.mu2, e.sd2);
            }
        },
        family);
}

IceLaw::IceLaw(EffectFamily family) : family_(std::move(family)) { check_effect(family_); }

double IceLaw::cdf(double y) const {
    return std::visit(
        [y](const auto& e) -> double {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, GaussianEffect>) {
                return normal_cdf((y - e.mean) / e.sd);
            } else if constexpr (std::is_same_v<T, ShiftedLogNormalEffect>) {
                const double x = y - e.shift();
                return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - e.mu) / e.sigma);
            } else {
                return GaussianMixture({e.p, 1.0 - e.p}, {e.mu1, e.mu2}, {e.sd1, e.sd2}).cdf(y);
            }
        },
        family_);
}

double IceLaw::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("ice law quantile: q must lie in (0,1)");
    return std::visit(
        [q](const auto& e) -> double {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, GaussianEffect>) {
                return e.mean + e.sd * normal_quantile(q);
            } else if constexpr (std::is_same_v<T, ShiftedLogNormalEffect>) {
                return e.shift() + std::exp(e.mu + e.sigma * normal_quantile(q));
            } else {
                return GaussianMixture({e.p, 1.0 - e.p}, {e.mu1, e.mu2}, {e.sd1, e.sd2}).quantile(q);
            }
        },
        family_);
}

double IceLaw::mean() const {
    return std::visit(
        [](const auto& e) -> double {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, GaussianEffect>) {
                return e.mean;
            } else if constexpr (std::is_same_v<T, ShiftedLogNormalEffect>) {
                return e.target_mean;
            } else {
                return e.p * e.mu1 + (1.0 - e.p) * e.mu2;
            }
        },
        family_);
}

double IceLaw::sample(Rng& rng) const { return sample_effect(family_, rng); }

IceLaw true_ice_law(const ScmConfig& cfg) { return IceLaw(cfg.effect); }

// ---------------------------------------------------------------------------

std::vector<std::string> scm_preset_names() { return {"fig3-gaussian", "fig3-lognormal", "fig3-mixture"}; }

ScmConfig scm_preset(std::string_view name) {
    ScmConfig cfg;
    cfg.beta0 = 120.0;
    cfg.beta_l = {5.0};
    cfg.confounder_laws = {DiscreteLaw{{-0.3, 0.7}, {0.7, 0.3}}};
    cfg.confounder_names = {"l_1"};
    cfg.alpha0 = -3.0;
    cfg.alpha_l = {0.7};
    cfg.sigma = std::sqrt(50.0);
    if (name == "fig3-gaussian") {
        cfg.effect = GaussianEffect{-15.0, 10.0};
    } else if (name == "fig3-lognormal") {
        cfg.effect = ShiftedLogNormalEffect{4.0, std::sqrt(0.5), -15.0};
    } else if (name == "fig3-mixture") {
        cfg.effect = TwoGaussianMixtureEffect{0.6, -31.0, 10.0, 9.0, 5.0};
    } else {
        throw std::invalid_argument("unknown preset '" + std::string(name) +
                                    "' (expected fig3-gaussian, fig3-lognormal or fig3-mixture)");
    }
    return cfg;
}

// ---------------------------------------------------------------------------

Json scm_to_json(const ScmConfig& cfg) {
    Json j;
    j["beta0"] = cfg.beta0;
    j["alpha0"] = cfg.alpha0;
    j["sigma"] = cfg.sigma;
    Json conf = Json::array();
    for (std::size_t k = 0; k < cfg.n_confounders(); ++k) {
        Json c;
        c["name"] = cfg.confounder_names[k];
        c["beta"] = cfg.beta_l[k];
        c["alpha"] = cfg.alpha_l[k];
        if (const auto* d = std::get_if<DiscreteLaw>(&cfg.confounder_laws[k])) {
            c["support"] = d->support;
            c["probs"] = d->probs;
        } else {
            const auto& n = std::get<NormalLaw>(cfg.confounder_laws[k]);
            c["normal"] = Json{{"mean", n.mean}, {"sd", n.sd}};
        }
        conf.push_back(std::move(c));
    }
    j["confounders"] = std::move(conf);
    j["effect"] = std::visit(
        [](const auto& e) -> Json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, GaussianEffect>) {
                return Json{{"family", "gaussian"}, {"mean", e.mean}, {"sd", e.sd}};
            } else if constexpr (std::is_same_v<T, ShiftedLogNormalEffect>) {
                return Json{{"family", "shifted_lognormal"}, {"mu", e.mu}, {"sigma", e.sigma},
                            {"target_mean", e.target_mean}};
            } else {
                return Json{{"family", "two_gaussian_mixture"}, {"p", e.p},     {"mu1", e.mu1},
                            {"sd1", e.sd1},                     {"mu2", e.mu2}, {"sd2", e.sd2}};
            }
        },
        cfg.effect);
    if (cfg.residual) j["residual"] = mixture_to_json(*cfg.residual);
    if (!cfg.heterogeneity.empty()) {
        Json het = Json::array();
        for (const auto& h : cfg.heterogeneity) {
            het.push_back(Json{{"confounder", cfg.confounder_names[h.confounder]},
                               {"threshold", h.threshold},
                               {"sd", h.sd}});
        }
        j["heterogeneity"] = std::move(het);
    }
    return j;
}

ScmConfig scm_from_json(const Json& j) {
    const std::string root = "config";
    if (!j.is_object()) jf::fail(root, "expected an object");
    ScmConfig cfg;
    cfg.beta0 = jf::number(j, "beta0", root);
    cfg.alpha0 = jf::number(j, "alpha0", root);
    cfg.sigma = jf::positive(j, "sigma", root);

    const Json& conf = jf::child(j, "confounders", root);
    if (!conf.is_array()) jf::fail(root + ".confounders", "expected an array");
    for (std::size_t k = 0; k < conf.size(); ++k) {
        const std::string path = root + ".confounders[" + std::to_string(k) + "]";
        const Json& c = conf[k];
        if (!c.is_object()) jf::fail(path, "expected an object");
        cfg.confounder_names.push_back(c.contains("name") ? jf::string(c, "name", path)
                                                          : "l_" + std::to_string(k + 1));
        cfg.beta_l.push_back(jf::number(c, "beta", path));
        cfg.alpha_l.push_back(jf::number(c, "alpha", path));
        if (c.contains("normal")) {
            const Json& n = c.at("normal");
            cfg.confounder_laws.push_back(
                NormalLaw{jf::number(n, "mean", path + ".normal"), jf::positive(n, "sd", path + ".normal")});
        } else {
            DiscreteLaw d{jf::numbers(c, "support", path), jf::numbers(c, "probs", path)};
            if (d.support.empty() || d.support.size() != d.probs.size()) {
                jf::fail(path, "support and probs must be non-empty and equally long");
            }
            try {
                check_simplex(d.probs, path + ".probs");
            } catch (const std::invalid_argument&) {
                jf::fail(path + ".probs", "probabilities must form a simplex");
            }
            cfg.confounder_laws.push_back(std::move(d));
        }
    }

    const std::string epath = root + ".effect";
    const Json& e = jf::child(j, "effect", root);
    const std::string family = jf::string(e, "family", epath);
    if (family == "gaussian") {
        cfg.effect = GaussianEffect{jf::number(e, "mean", epath), jf::positive(e, "sd", epath)};
    } else if (family == "shifted_lognormal") {
        cfg.effect = ShiftedLogNormalEffect{jf::number(e, "mu", epath), jf::positive(e, "sigma", epath),
                                            jf::number(e, "target_mean", epath)};
    } else if (family == "two_gaussian_mixture") {
        const double p = jf::number(e, "p", epath);
        if (!(p >= 0.0 && p <= 1.0)) jf::fail(epath + ".p", "expected a probability in [0,1]");
        cfg.effect = TwoGaussianMixtureEffect{p, jf::number(e, "mu1", epath), jf::positive(e, "sd1", epath),
                                              jf::number(e, "mu2", epath), jf::positive(e, "sd2", epath)};
    } else {
        jf::fail(epath + ".family",
                 "unknown family '" + family + "' (gaussian, shifted_lognormal, two_gaussian_mixture)");
    }

    if (j.contains("residual")) {
        try {
            cfg.residual = mixture_from_json(j.at("residual"));
        } catch (const std::exception& ex) {
            jf::fail(root + ".residual", ex.what());
        }
    }
    if (j.contains("heterogeneity")) {
        const Json& het = j.at("heterogeneity");
        if (!het.is_array()) jf::fail(root + ".heterogeneity", "expected an array");
        for (std::size_t k = 0; k < het.size(); ++k) {
            const std::string path = root + ".heterogeneity[" + std::to_string(k) + "]";
            const std::string name = jf::string(het[k], "confounder", path);
            const auto it = std::find(cfg.confounder_names.begin(), cfg.confounder_names.end(), name);
            if (it == cfg.confounder_names.end()) jf::fail(path + ".confounder", "no confounder named '" + name + "'");
            HeterogeneityTerm h;
            h.confounder = static_cast<std::size_t>(it - cfg.confounder_names.begin());
            h.threshold = jf::number(het[k], "threshold", path);
            h.sd = jf::number(het[k], "sd", path);
            if (!(h.sd >= 0.0)) jf::fail(path + ".sd", "expected a non-negative number");
            cfg.heterogeneity.push_back(h);
        }
    }
    cfg.validate();
    return cfg;
}

void write_truth_csv(const HiddenTruth& truth, const std::filesystem::path& path) {
    CsvTable t;
    t.header = {"u", "y0", "y1"};
    t.rows.reserve(truth.u.size());
    for (std::size_t i = 0; i < truth.u.size(); ++i) {
        t.rows.push_back({truth.u[i], truth.y0[i], truth.y1[i]});
    }
    write_csv(t, path);
}

}  // namespace icedist
