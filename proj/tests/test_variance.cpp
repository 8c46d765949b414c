#include "doctest.h"

#include <cmath>

#include "icedist/scm.hpp"
#include "icedist/stats.hpp"
#include "icedist/variance.hpp"

using namespace icedist;

namespace {

ArmMoments moments(double mean1, double mean0, double var1, double var0, std::size_t n1 = 100,
                   std::size_t n0 = 100) {
    ArmMoments m;
    m.n1 = n1;
    m.n0 = n0;
    m.mean1 = mean1;
    m.mean0 = mean0;
    m.var1 = var1;
    m.var0 = var0;
    return m;
}

ScmConfig rct(EffectFamily effect) {
    ScmConfig cfg = scm_preset("fig3-gaussian");
    cfg.alpha0 = 0.0;
    cfg.alpha_l = {0.0};
    cfg.beta_l = {0.0};
    cfg.effect = effect;
    return cfg;
}

}  // namespace

TEST_CASE("lower bound examples and surface") {
    CHECK(cs_lower_bound(4, 1) == 1.0);
    for (double v : {0.0, 0.3, 7.0, 1e6}) CHECK(cs_lower_bound(v, v) == 0.0);
    CHECK_THROWS_AS(cs_lower_bound(-1, 1), std::invalid_argument);
    const CsvTable grid = lower_bound_grid(100, 100, 21);
    CHECK(grid.rows.size() == 441);
    // Along any var0 the bound grows with the difference; at fixed difference
    // it shrinks as var0 grows.
    for (std::size_t i = 0; i < 21; ++i) {
        for (std::size_t k = 1; k < 21; ++k) {
            CHECK(grid.rows[i * 21 + k][3] >= grid.rows[i * 21 + k - 1][3]);
            if (i > 0) CHECK(grid.rows[i * 21 + k][3] <= grid.rows[(i - 1) * 21 + k][3]);
        }
    }
}

TEST_CASE("additive and multiplicative estimators") {
    CHECK(additive_ice_variance(moments(0, 0, 150, 50)) == 100.0);
    CHECK(additive_ice_variance(moments(0, 0, 7, 7)) == 0.0);
    // Equal means force the factor to -1.
    CHECK(multiplicative_ice_variance(moments(10, 10, 9, 4)) == doctest::Approx(5.0));
    // Half the mean zeroes the factor.
    CHECK(multiplicative_ice_variance(moments(5, 10, 9, 4)) == doctest::Approx(9.0));
    CHECK_THROWS_AS(multiplicative_ice_variance(moments(5, 0, 9, 4)), std::domain_error);
    for (double v0 = 0.0; v0 <= 100.0; v0 += 5.0) {
        for (double v1 = v0; v1 <= 200.0; v1 += 7.0) {
            CHECK(cs_lower_bound(v1, v0) <= additive_ice_variance(moments(0, 0, v1, v0)) + 1e-12);
        }
    }
}

TEST_CASE("heterogeneity test") {
    Dataset ds;
    const Eigen::VectorXd vals = Eigen::VectorXd::LinSpaced(20, -3, 5);
    ds.y.resize(40);
    ds.y << vals, vals;
    ds.a.resize(40);
    ds.a << Eigen::VectorXi::Ones(20), Eigen::VectorXi::Zero(20);
    ds.l.resize(40, 0);
    const HeterogeneityReport r = heterogeneity_test(ds);
    CHECK(r.overall.variance_ratio == doctest::Approx(1.0));
    CHECK(!r.overall.flag);

    const HeterogeneityTest f = heterogeneity_test(moments(0, 0, 2.0, 1.0, 10, 20));
    CHECK(f.p_value_one_sided == doctest::Approx(0.09741320499713226).epsilon(1e-9));
    CHECK(f.p_value == doctest::Approx(0.1948264099942645).epsilon(1e-9));
    CHECK(!f.flag);

    const double s1 = 2.27, s0 = 1.74;
    const HeterogeneityTest fhs = heterogeneity_test(moments(0, 0, s1 * s1, s0 * s0, 500, 1800));
    CHECK(std::abs(fhs.variance_ratio - 1.70) < 0.01);
    CHECK(fhs.flag);
    CHECK(fhs.p_value_one_sided == doctest::Approx(3.095385094127018e-15).epsilon(1e-6));

    const Simulation sim = simulate(rct(GaussianEffect{-15, 10}), 200000, Rng(12));
    const HeterogeneityReport big = heterogeneity_test(sim.data);
    CHECK(std::abs(big.overall.variance_ratio - 3.0) < 0.1);
    CHECK(big.overall.flag);

    Dataset tiny = ds;
    tiny.a.setZero();
    tiny.a[0] = 1;
    CHECK_THROWS_AS(heterogeneity_test(tiny), std::invalid_argument);
}

TEST_CASE("stratified additive estimate on observational data") {
    const Simulation sim = simulate(scm_preset("fig3-gaussian"), 1'000'000, Rng(31));
    const Stratification strata = stratify(sim.data, {"l_1"});
    REQUIRE(strata.labels.size() == 2);
    CHECK(strata.labels[0] == "l_1=-0.3");
    const VarianceReport rep = variance_report(sim.data, strata);
    for (const auto& row : rep.strata) {
        CHECK_MESSAGE(std::abs(row.additive - 100.0) < 3.0, row.moments.stratum);
        CHECK(row.lower_bound <= row.additive);
    }
    const Json j = variance_report_to_json(rep);
    CHECK(j.at("strata").size() == 2);
    CHECK(j.at("overall").contains("multiplicative"));
}

TEST_CASE("multiplicative estimate on multiplicative truth") {
    Rng rng(99);
    const std::size_t n = 1'000'000;
    Dataset ds;
    ds.y.resize(n);
    ds.a.resize(n);
    ds.l.resize(n, 0);
    RunningMoments ice;
    for (std::size_t i = 0; i < n; ++i) {
        const double y0 = rng.normal(10.0, 2.0);
        const double y1 = y0 * rng.normal(1.2, 0.1);
        const int a = rng.bernoulli(0.5) ? 1 : 0;
        ds.y[static_cast<Eigen::Index>(i)] = a ? y1 : y0;
        ds.a[static_cast<Eigen::Index>(i)] = a;
        ice.push(y1 - y0);
    }
    const double est = multiplicative_ice_variance(arm_moments(ds));
    CHECK(std::abs(est / ice.variance() - 1.0) < 0.02);
    // Analytic value: var(Y0 (U - 1)) = 0.1^2 (100 + 4) + 0.2^2 4.
    CHECK(std::abs(ice.variance() - 1.2) < 0.01);
}

TEST_CASE("shift behaviour and constant stratification") {
    const Simulation sim = simulate(scm_preset("fig3-gaussian"), 50000, Rng(2));
    Dataset shifted = sim.data;
    shifted.y.array() += 37.0;
    const ArmMoments a = arm_moments(sim.data), b = arm_moments(shifted);
    CHECK(additive_ice_variance(b) == doctest::Approx(additive_ice_variance(a)).epsilon(1e-10));
    CHECK(cs_lower_bound(b.var1, b.var0) == doctest::Approx(cs_lower_bound(a.var1, a.var0)).epsilon(1e-10));
    CHECK(std::abs(multiplicative_ice_variance(b) - multiplicative_ice_variance(a)) > 1.0);

    const auto one = arm_moments(sim.data, Stratification::constant(sim.data.size()));
    REQUIRE(one.size() == 1);
    CHECK(one[0].var1 == a.var1);
    CHECK(one[0].var0 == a.var0);
    CHECK(one[0].mean1 == a.mean1);
    CHECK(one[0].mean0 == a.mean0);
    const auto via_stratify = arm_moments(sim.data, stratify(sim.data, {}));
    CHECK(via_stratify[0].var1 == a.var1);
}

TEST_CASE("empty stratum arm is reported by name") {
    Dataset ds;
    ds.y = Eigen::VectorXd::LinSpaced(8, 0, 7);
    ds.a = (Eigen::VectorXi(8) << 1, 1, 0, 0, 0, 0, 1, 0).finished();
    ds.l = (Eigen::MatrixXd(8, 1) << 0, 0, 0, 0, 1, 1, 1, 1).finished();
    ds.confounder_names = {"g"};
    try {
        variance_report(ds, stratify(ds, {"g"}));
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("g=1") != std::string::npos);
    }
}
