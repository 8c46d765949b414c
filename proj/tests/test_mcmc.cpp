#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include "fixtures.hpp"
#include "icedist/lmm.hpp"
#include "icedist/mcmc.hpp"
#include "icedist/stats.hpp"

using namespace icedist;

namespace {

// Plain transcription of the joint density, kept free of library helpers.
double naive_log_density(const AugmentedState& s, const Dataset& ds, const Eigen::MatrixXd& h, double v,
                         double upper, double alpha) {
    auto lnorm = [](double x, double m, double sd) {
        return std::log(std::exp(-0.5 * (x - m) * (x - m) / (sd * sd)) / (sd * std::sqrt(2.0 * M_PI)));
    };
    auto ldir = [alpha](const std::vector<double>& p) {
        double out = std::lgamma(alpha * static_cast<double>(p.size()));
        for (double w : p) out += (alpha - 1.0) * std::log(w) - std::lgamma(alpha);
        return out;
    };
    double lp = 0.0;
    for (Eigen::Index i = 0; i < s.beta.size(); ++i) lp += lnorm(s.beta[i], 0.0, std::sqrt(v));
    for (double m : s.mu) lp += lnorm(m, 0.0, std::sqrt(v)) + std::log(1.0 / upper);
    if (s.p.size() > 1) lp += ldir(s.p);
    lp += static_cast<double>(s.taut.size() + s.het_sd.size()) * std::log(1.0 / upper);
    if (s.pt.size() > 1) {
        lp += ldir(s.pt);
        for (std::size_t m = 0; m + 1 < s.mut.size(); ++m) lp += lnorm(s.mut[m], 0.0, std::sqrt(v));
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        double mean = s.beta[0];
        for (Eigen::Index j = 0; j < ds.l.cols(); ++j) mean += s.beta[j + 1] * ds.l(r, j);
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
            if (h(r, j) == 1.0) {
                mean += s.zl(r, j);
                lp += lnorm(s.zl(r, j), 0.0, s.het_sd[static_cast<std::size_t>(j)]);
            }
        }
        if (ds.a[r] == 1) {
            const auto k = static_cast<std::size_t>(s.c1[i]);
            lp += std::log(s.p[k]) + lnorm(s.z1[r], s.mu[k], s.tau[k]);
            mean += s.z1[r];
        }
        const auto m = static_cast<std::size_t>(s.c0[i]);
        if (s.pt.size() > 1) lp += std::log(s.pt[m]);
        lp += lnorm(ds.y[r], mean + s.mut[m], s.taut[m]);
    }
    return lp;
}

ModelSpec het_model() {
    ModelSpec m;
    m.kind = ModelKind::MixtureLmmConfHet;
    m.k_effect = 3;
    m.k_residual = 2;
    m.het_confounders = {"l_1"};
    return m;
}

AugmentedState random_state(const ModelData& md, const ModelSpec& model, Rng& rng) {
    const std::size_t n = md.ds->size();
    const auto kk = static_cast<std::size_t>(model.effect_components());
    const auto mm = static_cast<std::size_t>(model.residual_components());
    AugmentedState s;
    s.beta.resize(md.x.cols());
    for (Eigen::Index j = 0; j < s.beta.size(); ++j) s.beta[j] = rng.normal(0.0, 2.0);
    s.p = rng.dirichlet(std::vector<double>(kk, 1.0));
    s.pt = rng.dirichlet(std::vector<double>(mm, 1.0));
    for (std::size_t k = 0; k < kk; ++k) {
        s.mu.push_back(rng.normal(0.0, 3.0));
        s.tau.push_back(rng.uniform(0.2, 5.0));
    }
    for (std::size_t m = 0; m < mm; ++m) {
        s.mut.push_back(rng.normal());
        s.taut.push_back(rng.uniform(0.5, 3.0));
    }
    for (Eigen::Index j = 0; j < md.h.cols(); ++j) s.het_sd.push_back(rng.uniform(0.1, 2.0));
    const auto rows = static_cast<Eigen::Index>(n);
    s.z1.resize(rows);
    s.zl.resize(rows, md.h.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        s.z1[r] = rng.normal(1.0, 2.0);
        s.c1.push_back(static_cast<int>(rng.uniform() * static_cast<double>(kk)));
        s.c0.push_back(static_cast<int>(rng.uniform() * static_cast<double>(mm)));
        for (Eigen::Index j = 0; j < md.h.cols(); ++j) s.zl(r, j) = rng.normal();
    }
    return s;
}

ChainConfig small_chains(long burn, long iter, long thin, std::uint64_t seed) {
    ChainConfig cc;
    cc.n_chains = 2;
    cc.n_burn = burn;
    cc.n_iter = iter;
    cc.thin = thin;
    cc.seed = seed;
    return cc;
}

}  // namespace

TEST_CASE("log posterior agrees with a naive evaluator") {
    const Dataset ds = fixtures::lmm_data(60, 0.5, 1.0, 1.0, 9);
    const ModelSpec model = het_model();
    const PriorSpec prior;
    const ModelData md = ModelData::make(ds, model);
    Rng rng(12);
    for (int t = 0; t < 100; ++t) {
        const AugmentedState s = random_state(md, model, rng);
        const double got = log_posterior(s, md, model, prior);
        const double want =
            naive_log_density(s, ds, md.h, prior.location_prior_var, prior.scale_prior_upper, prior.dirichlet_alpha);
        REQUIRE(std::isfinite(got));
        CHECK(std::abs(got - want) < 1e-8);
    }
}

TEST_CASE("log posterior is symmetric in component labels and enforces support") {
    const Dataset ds = fixtures::lmm_data(40, 0.5, 1.0, 1.0, 10);
    const ModelSpec model = het_model();
    const PriorSpec prior;
    const ModelData md = ModelData::make(ds, model);
    Rng rng(3);
    const AugmentedState s = random_state(md, model, rng);
    const double base = log_posterior(s, md, model, prior);

    const std::vector<int> perm{2, 0, 1};  // old component k becomes perm[k]
    AugmentedState t = s;
    for (std::size_t k = 0; k < 3; ++k) {
        t.p[static_cast<std::size_t>(perm[k])] = s.p[k];
        t.mu[static_cast<std::size_t>(perm[k])] = s.mu[k];
        t.tau[static_cast<std::size_t>(perm[k])] = s.tau[k];
    }
    for (auto& c : t.c1) c = perm[static_cast<std::size_t>(c)];
    CHECK(log_posterior(t, md, model, prior) == doctest::Approx(base).epsilon(1e-13));

    AugmentedState low = s;
    for (double& x : low.tau) x = 0.0;
    CHECK(log_posterior(low, md, model, prior) == -std::numeric_limits<double>::infinity());
    AugmentedState high = s;
    high.taut[0] = 100.5;
    CHECK(log_posterior(high, md, model, prior) == -std::numeric_limits<double>::infinity());
    AugmentedState edge = s;
    edge.het_sd[0] = 100.0;
    CHECK(std::isfinite(log_posterior(edge, md, model, prior)));
    AugmentedState label = s;
    label.c0[0] = 2;
    CHECK(log_posterior(label, md, model, prior) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("slice sampler targets its density") {
    Rng rng(5);
    std::vector<double> draws;
    double x = 0.0;
    auto logf = [](double v) { return -0.5 * v * v; };
    for (int i = 0; i < 40000; ++i) {
        x = slice_sample(x, logf, 1.0, 32, std::numeric_limits<double>::infinity(), rng);
        if (i % 2 == 0) draws.push_back(x);
    }
    CHECK(ks_distance(draws, [](double v) { return normal_cdf(v); }) < 0.02);

    // Truncation: standard normal restricted to (-inf, 0.5].
    draws.clear();
    x = 0.0;
    for (int i = 0; i < 40000; ++i) {
        x = slice_sample(x, logf, 1.0, 32, 0.5, rng);
        REQUIRE(x <= 0.5);
        if (i % 2 == 0) draws.push_back(x);
    }
    const double z = normal_cdf(0.5);
    CHECK(ks_distance(draws, [z](double v) { return std::min(normal_cdf(v) / z, 1.0); }) < 0.02);
}

TEST_CASE("prior-only run reproduces the priors") {
    const Dataset empty;
    ModelSpec model = ModelSpec::defaults_for(ModelKind::MixtureLmm);
    ChainConfig cc = small_chains(1000, 100000, 10, 77);
    cc.n_chains = 1;
    cc.z1_every = 0;
    const PosteriorDraws d = run_chains(empty, model, PriorSpec{}, cc);
    REQUIRE(d.retained_per_chain() == 10000);
    const auto mu = d.column("mu_1").front();
    const auto tau = d.column("tau_2").front();
    const auto p = d.column("p_1").front();
    const boost::math::normal mu_prior(0.0, std::sqrt(1e5));
    const boost::math::beta_distribution<> p_prior(0.5, 2.0);
    CHECK(ks_distance(mu, [&](double v) { return boost::math::cdf(mu_prior, v); }) < 0.02);
    CHECK(ks_distance(tau, [](double v) { return std::clamp(v / 100.0, 0.0, 1.0); }) < 0.02);
    CHECK(ks_distance(p, [&](double v) { return boost::math::cdf(p_prior, std::clamp(v, 0.0, 1.0)); }) < 0.02);
}

TEST_CASE("no exposed individuals is an error") {
    Dataset ds = fixtures::lmm_data(30, 0.0, 1.0, 1.0, 1);
    ds.a.setZero();
    ds.l.resize(30, 0);
    ds.confounder_names.clear();
    CHECK_THROWS_WITH_AS(run_chains(ds, ModelSpec{}, PriorSpec{}, small_chains(10, 10, 1, 1)),
                         doctest::Contains("no exposed individuals"), std::invalid_argument);
}

TEST_CASE("constrained residual mixture has mean zero in every state") {
    const Dataset ds = fixtures::lmm_data(200, 1.0, 0.5, 1.0, 14);
    ModelSpec model = ModelSpec::defaults_for(ModelKind::MixtureLmmFlexResidual);
    model.k_effect = 2;
    const PosteriorDraws d = run_chains(ds, model, PriorSpec{}, small_chains(200, 2000, 2, 5));
    d.validate();
    for (std::size_t c = 0; c < d.n_chains(); ++c) {
        for (Eigen::Index r = 0; r < d.chains[c].params.rows(); ++r) {
            const GaussianMixture res = d.residual_mixture(c, r);
            double acc = 0.0;
            for (std::size_t m = 0; m < res.size(); ++m) acc += res.weights()[m] * res.means()[m];
            REQUIRE(std::abs(acc) < 1e-12);
        }
    }
}

TEST_CASE("parallel chains equal serial chains") {
    const Dataset ds = fixtures::lmm_data(80, 1.0, 0.5, 1.0, 15);
    ModelSpec model = het_model();
    ChainConfig cc = small_chains(50, 200, 2, 8);
    cc.n_chains = 3;
    cc.z1_every = 10;
    const PosteriorDraws a = run_chains(ds, model, PriorSpec{}, cc);
    const PosteriorDraws b = run_chains_serial(ds, model, PriorSpec{}, cc);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(a.chains[c].params == b.chains[c].params);
        CHECK(a.chains[c].z1 == b.chains[c].z1);
        CHECK(a.chains[c].z1_rows == b.chains[c].z1_rows);
    }
    CHECK(a.chains[0].params != a.chains[1].params);
    CHECK(a.chains[0].z1_rows == std::vector<long>{0, 10, 20, 30, 40, 50, 60, 70, 80, 90});
}

TEST_CASE("single-component model agrees with maximum likelihood") {
    const Dataset ds = fixtures::lmm_data(800, 0.8, 2.0, 1.5, 21);
    const LmmFit ml = fit_lmm(ds, {ds.confounder_names, {}});
    ModelSpec model = ModelSpec::defaults_for(ModelKind::GaussianLmm);
    ChainConfig cc = small_chains(1000, 8000, 4, 3);
    cc.z1_every = 0;
    const PosteriorDraws d = run_chains(ds, model, PriorSpec{}, cc);
    auto pooled = [&d](const std::string& name, bool square) {
        std::vector<double> out;
        for (const auto& c : d.column(name)) {
            for (double v : c) out.push_back(square ? v * v : v);
        }
        return out;
    };
    auto within = [](const std::vector<double>& draws, double target) {
        return std::abs(mean_of(draws) - target) < 3.0 * sd_of(draws);
    };
    CHECK(within(pooled("mu_1", false), ml.exposure_effect()));
    CHECK(within(pooled("tau_1", true), ml.var_z1));
    CHECK(within(pooled("sigma", true), ml.var_resid));
    CHECK(within(pooled("beta_0", false), ml.beta[0]));
    CHECK(within(pooled("beta_l_1", false), ml.beta[1]));
}

TEST_CASE("permuted initial labels give the same ICE distribution") {
    const Simulation sim = simulate(scm_preset("fig3-mixture"), 300, Rng(4));
    ModelSpec model;
    model.k_effect = 3;
    ChainConfig cc = small_chains(500, 4000, 4, 19);
    cc.z1_every = 2;
    const PosteriorDraws a = run_chains(sim.data, model, PriorSpec{}, cc);

    const ModelData md = ModelData::make(sim.data, model);
    AugmentedState init = initial_state(sim.data, md, model, PriorSpec{});
    std::reverse(init.p.begin(), init.p.end());
    std::reverse(init.mu.begin(), init.mu.end());
    std::reverse(init.tau.begin(), init.tau.end());
    ChainConfig permuted = cc;
    permuted.init = init.flatten(a.layout);
    const PosteriorDraws b = run_chains(sim.data, model, PriorSpec{}, permuted);
    CHECK(a.chains[0].params != b.chains[0].params);
    CHECK(ks_distance_two_sample(a.pooled_z1(), b.pooled_z1()) < 0.02);
}
