#include "doctest.h"

#include <cmath>
#include <cstring>

#include "icedist/scm.hpp"
#include "icedist/stats.hpp"

using namespace icedist;

namespace {

// Exposure rate of the preset design from its two confounder levels.
double fig3_exposure_rate() {
    auto e = [](double x) { return std::exp(x) / (1.0 + std::exp(x)); };
    return 0.7 * e(-3.0 + 0.7 * -0.3) + 0.3 * e(-3.0 + 0.7 * 0.7);
}

bool same_bytes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("fig3 gaussian simulation at n = 1e6") {
    const ScmConfig cfg = scm_preset("fig3-gaussian");
    const Simulation sim = simulate(cfg, 1'000'000, Rng(2020));
    const Dataset& ds = sim.data;
    RunningMoments y0, u;
    double exposed = 0.0;
    for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
        if (ds.a[i] == 0) y0.push(ds.y[i]);
        exposed += ds.a[i];
        u.push(sim.truth.u[static_cast<std::size_t>(i)]);
    }
    CHECK(std::abs(y0.mean - 120.0) < 0.05);
    CHECK(std::abs(exposed / 1e6 - fig3_exposure_rate()) < 0.002);
    CHECK(std::abs(fig3_exposure_rate() - 0.0497) < 1e-4);
    CHECK(std::abs(u.mean - (-15.0)) < 0.05);

    // Consistency: the observed outcome is the potential outcome under A.
    for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        CHECK_MESSAGE(ds.y[i] == (ds.a[i] ? sim.truth.y1[k] : sim.truth.y0[k]), "row ", i);
        if (i > 1000) break;
    }
    bool consistent = true;
    for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        consistent = consistent && ds.y[i] == (ds.a[i] ? sim.truth.y1[k] : sim.truth.y0[k]) &&
                     sim.truth.y1[k] - sim.truth.y0[k] == doctest::Approx(sim.truth.u[k]);
    }
    CHECK(consistent);
}

TEST_CASE("no unmeasured confounding and stratum variances") {
    const ScmConfig cfg = scm_preset("fig3-gaussian");
    const Simulation sim = simulate(cfg, 1'000'000, Rng(7));
    for (double level : {-0.3, 0.7}) {
        // Correlation of U and A within the stratum, against 3 standard errors.
        std::vector<double> uu, aa;
        RunningMoments y0;
        for (Eigen::Index i = 0; i < sim.data.y.size(); ++i) {
            if (sim.data.l(i, 0) != level) continue;
            uu.push_back(sim.truth.u[static_cast<std::size_t>(i)]);
            aa.push_back(sim.data.a[i]);
            if (sim.data.a[i] == 0) y0.push(sim.data.y[i]);
        }
        const double mu = mean_of(uu), ma = mean_of(aa), su = sd_of(uu), sa = sd_of(aa);
        double cov = 0.0;
        for (std::size_t k = 0; k < uu.size(); ++k) cov += (uu[k] - mu) * (aa[k] - ma);
        const double corr = cov / static_cast<double>(uu.size() - 1) / (su * sa);
        CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(uu.size())));
        CHECK(std::abs(y0.variance() / 50.0 - 1.0) < 0.02);
    }
}

TEST_CASE("serial and parallel simulators are byte-identical and deterministic") {
    for (const auto& name : scm_preset_names()) {
        const ScmConfig cfg = scm_preset(name);
        for (std::size_t n : {1ul, 4095ul, 4096ul, 4097ul, 20000ul}) {
            const Simulation a = simulate_serial(cfg, n, Rng(5));
            const Simulation b = simulate(cfg, n, Rng(5));
            CHECK(same_bytes(a.data.y, b.data.y));
            CHECK(a.data.a == b.data.a);
            CHECK(same_bytes(a.data.l, b.data.l));
            CHECK(a.truth.u == b.truth.u);
        }
        const Simulation c = simulate(cfg, 5000, Rng(6));
        const Simulation d = simulate(cfg, 5000, Rng(6));
        const Simulation e = simulate(cfg, 5000, Rng(8));
        CHECK(same_bytes(c.data.y, d.data.y));
        CHECK(!same_bytes(c.data.y, e.data.y));
    }
    CHECK_THROWS_AS(simulate(scm_preset("fig3-gaussian"), 0, Rng(1)), std::invalid_argument);
}

TEST_CASE("true ice laws") {
    const IceLaw ln = true_ice_law(scm_preset("fig3-lognormal"));
    const double shift = -15.0 - std::exp(4.25);
    const double oracle = 1.0 - normal_cdf((std::log(std::exp(4.25) + 15.0) - 4.0) / std::sqrt(0.5));
    CHECK(1.0 - ln.cdf(0.0) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(std::abs(1.0 - ln.cdf(0.0) - 0.27) < 0.005);
    CHECK(std::abs(ln.quantile(0.95) - 89.60) < 0.05);
    CHECK(ln.cdf(shift - 1.0) == 0.0);
    CHECK(ln.mean() == -15.0);
    CHECK(std::get<ShiftedLogNormalEffect>(ln.family()).shift() == doctest::Approx(shift));

    const IceLaw g = true_ice_law(scm_preset("fig3-gaussian"));
    CHECK(g.quantile(0.5) == doctest::Approx(-15.0).epsilon(1e-12));
    const IceLaw m = true_ice_law(scm_preset("fig3-mixture"));
    CHECK(std::abs(m.quantile(0.05) - (-44.83)) < 0.01);
    CHECK(m.mean() == doctest::Approx(-15.0));

    Rng rng(1);
    double s = 0.0;
    for (int i = 0; i < 200000; ++i) s += ln.sample(rng);
    CHECK(std::abs(s / 200000 - (-15.0)) < 0.5);
}

TEST_CASE("scm config json round trip and validation errors") {
    ScmConfig cfg = scm_preset("fig3-mixture");
    cfg.confounder_laws.push_back(NormalLaw{0.0, 2.0});
    cfg.confounder_names.push_back("z");
    cfg.beta_l.push_back(1.0);
    cfg.alpha_l.push_back(0.5);
    cfg.residual = GaussianMixture({0.5, 0.5}, {-5, 5}, {1, 1});
    cfg.heterogeneity.push_back({1, 0.0, 2.0});
    const Json j = scm_to_json(cfg);
    const ScmConfig back = scm_from_json(j);
    CHECK(scm_to_json(back).dump() == j.dump());
    const Simulation a = simulate(cfg, 3000, Rng(3));
    const Simulation b = simulate(back, 3000, Rng(3));
    CHECK(same_bytes(a.data.y, b.data.y));

    auto error_of = [](const Json& doc) {
        try {
            scm_from_json(doc);
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    Json bad = j;
    bad["confounders"][0]["probs"] = {0.5, 0.6};
    CHECK(error_of(bad).find("config.confounders[0].probs") == 0);
    bad = j;
    bad["effect"].erase("sd1");
    CHECK(error_of(bad).find("config.effect.sd1") == 0);
    bad = j;
    bad["sigma"] = -1;
    CHECK(error_of(bad).find("config.sigma") == 0);
    bad = j;
    bad["effect"]["family"] = "cauchy";
    CHECK(error_of(bad).find("config.effect.family") == 0);
    bad = j;
    bad["heterogeneity"][0]["confounder"] = "nope";
    CHECK(error_of(bad).find("config.heterogeneity[0].confounder") == 0);
    CHECK_THROWS_AS(scm_preset("fig9"), std::invalid_argument);
}

TEST_CASE("heterogeneity terms inflate the variance above the threshold") {
    ScmConfig cfg;
    cfg.beta0 = 0.0;
    cfg.beta_l = {0.0};
    cfg.confounder_laws = {DiscreteLaw{{0.0, 1.0}, {0.5, 0.5}}};
    cfg.confounder_names = {"v"};
    cfg.alpha0 = 0.0;
    cfg.alpha_l = {0.0};
    cfg.sigma = 1.0;
    cfg.effect = GaussianEffect{0.0, 1.0};
    cfg.heterogeneity = {{0, 0.5, 2.0}};
    const Simulation sim = simulate(cfg, 200000, Rng(4));
    RunningMoments lo, hi;
    for (Eigen::Index i = 0; i < sim.data.y.size(); ++i) {
        if (sim.data.a[i] != 0) continue;
        (sim.data.l(i, 0) > 0.5 ? hi : lo).push(sim.data.y[i]);
    }
    CHECK(std::abs(lo.variance() - 1.0) < 0.03);
    CHECK(std::abs(hi.variance() - 5.0) < 0.15);
}
