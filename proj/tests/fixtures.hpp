#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "icedist/dataset.hpp"
#include "icedist/rng.hpp"
#include "icedist/scm.hpp"

namespace fixtures {

/// Data from the Gaussian random-exposure-effect model
///   y = 1 + 0.8 l + a (theta + w) + e,  w ~ N(0, omega2), e ~ N(0, sigma2),
/// with l ~ N(0,1) and P(a = 1) = expit(0.3 l).
inline icedist::Dataset lmm_data(std::size_t n, double theta, double omega2, double sigma2, std::uint64_t seed) {
    icedist::Rng rng(seed);
    icedist::Dataset ds;
    const auto rows = static_cast<Eigen::Index>(n);
    ds.y.resize(rows);
    ds.a.resize(rows);
    ds.l.resize(rows, 1);
    ds.confounder_names = {"l_1"};
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double l = rng.normal();
        const int a = rng.uniform() < icedist::expit(0.3 * l) ? 1 : 0;
        const double w = rng.normal(0.0, std::sqrt(omega2));
        const double e = rng.normal(0.0, std::sqrt(sigma2));
        ds.l(i, 0) = l;
        ds.a[i] = a;
        ds.y[i] = 1.0 + 0.8 * l + a * (theta + w) + e;
    }
    return ds;
}

/// Planted selection problem: `conf` is a mean confounder, `vhet` a binary
/// confounder that raises exposure odds and carries an individual-level
/// random effect, `n1`..`n4` are noise.
inline icedist::ScmConfig selection_scm() {
    icedist::ScmConfig cfg;
    cfg.beta0 = 0.0;
    cfg.confounder_names = {"conf", "vhet", "n1", "n2", "n3", "n4"};
    cfg.confounder_laws = {icedist::NormalLaw{0.0, 1.0}, icedist::DiscreteLaw{{0.0, 1.0}, {0.5, 0.5}},
                           icedist::NormalLaw{0.0, 1.0}, icedist::NormalLaw{0.0, 1.0},
                           icedist::NormalLaw{0.0, 1.0}, icedist::NormalLaw{0.0, 1.0}};
    cfg.beta_l = {1.5, 0.0, 0.0, 0.0, 0.0, 0.0};
    cfg.alpha0 = -0.75;
    cfg.alpha_l = {1.0, 1.5, 0.0, 0.0, 0.0, 0.0};
    cfg.sigma = 1.0;
    cfg.effect = icedist::GaussianEffect{2.0, 1.0};
    cfg.heterogeneity = {{1, 0.5, 2.0}};
    return cfg;
}

}  // namespace fixtures
