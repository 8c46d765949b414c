#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "icedist/kernels.hpp"
#include "icedist/rng.hpp"
#include "icedist/stats.hpp"

using namespace icedist;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal(0.0, sd);
    return v;
}

}  // namespace

TEST_CASE("Silverman bandwidth matches numpy") {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 30};
    CHECK(silverman_bandwidth(x) == doctest::Approx(2.0788788381173915).epsilon(1e-12));
    const std::vector<double> y{0, 0, 0, 0, 1, 1, 1, 1, 1, 5};
    CHECK(silverman_bandwidth(y) == doctest::Approx(0.42377732091953274).epsilon(1e-12));
    CHECK(silverman_bandwidth(std::vector<double>{2.0, 2.0, 2.0}) > 0.0);
    CHECK_THROWS_AS(silverman_bandwidth(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("KDE value matches scipy and the serial reference") {
    const std::vector<double> d{0.0, 1.0, 3.0};
    const std::vector<double> at{0.5};
    CHECK(kde_serial(d, 0.7, at)[0] == doctest::Approx(0.2947184457253646).epsilon(1e-13));
    CHECK(kde(d, 0.7, at)[0] == doctest::Approx(0.2947184457253646).epsilon(1e-13));

    const auto data = normals(20000, 3, 2.0);
    const double h = silverman_bandwidth(data);
    const auto grid = kde_grid(data, h, 512);
    CHECK(grid.size() == 512);
    CHECK(grid.front() == doctest::Approx(*std::min_element(data.begin(), data.end()) - 3.0 * h));
    CHECK(grid.back() == doctest::Approx(*std::max_element(data.begin(), data.end()) + 3.0 * h));
    const auto a = kde_serial(data, h, grid);
    const auto b = kde(data, h, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(b[i] >= 0.0);
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    CHECK(worst < 1e-12);
    CHECK(std::abs(trapezoid(grid, b) - 1.0) < 1e-3);
}

TEST_CASE("cell-averaged KDE") {
    // Exact cell mass of one kernel: (Phi(0.5) - Phi(-0.5)) / 1 at h = 1, step 1.
    const std::vector<double> one{0.0};
    const auto g = linear_grid(-2.0, 2.0, 5);
    CHECK(kde_cell_serial(one, 1.0, g)[2] == doctest::Approx(0.3829249225480262).epsilon(1e-13));
    CHECK(kde_cell(one, 1.0, g)[2] == doctest::Approx(0.3829249225480262).epsilon(1e-13));

    // Far outliers stretch the grid well past the bandwidth; the integral holds.
    auto data = normals(5000, 9);
    data.push_back(-1500.0);
    data.push_back(1200.0);
    const double h = silverman_bandwidth(data);
    const auto grid = kde_grid(data, h, 512);
    CHECK(grid[1] - grid[0] > 10.0 * h);
    const auto a = kde_cell_serial(data, h, grid);
    const auto b = kde_cell(data, h, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-14);
    CHECK(std::abs(trapezoid(grid, b) - 1.0) < 1e-3);
    CHECK(std::abs(trapezoid(grid, kde(data, h, grid)) - 1.0) > 1e-3);

    // On a fine grid the cell average is the point value.
    const auto fine = normals(2000, 10);
    const double hf = silverman_bandwidth(fine);
    const auto gf = kde_grid(fine, hf, 512);
    const auto pt = kde(fine, hf, gf);
    const auto cell = kde_cell(fine, hf, gf);
    const double step = gf[1] - gf[0];
    for (std::size_t i = 0; i < gf.size(); ++i) CHECK(std::abs(pt[i] - cell[i]) < step * step / (hf * hf) * 0.1);
}

TEST_CASE("pointwise band serial and parallel agree") {
    Rng rng(2);
    Eigen::MatrixXd curves(400, 64);
    for (Eigen::Index r = 0; r < curves.rows(); ++r) {
        for (Eigen::Index c = 0; c < curves.cols(); ++c) curves(r, c) = rng.normal(static_cast<double>(c), 1.0);
    }
    const Band s = pointwise_band_serial(curves, 0.025, 0.975);
    const Band p = pointwise_band(curves, 0.025, 0.975);
    CHECK(s.mean == p.mean);
    CHECK(s.lo == p.lo);
    CHECK(s.hi == p.hi);
    std::vector<double> col(curves.col(5).data(), curves.col(5).data() + curves.rows());
    CHECK(s.lo[5] == percentile(col, 0.025));
    CHECK(s.hi[5] == percentile(col, 0.975));
    CHECK(s.mean[5] == doctest::Approx(mean_of(col)).epsilon(1e-14));
}

TEST_CASE("mixture summaries serial and parallel agree") {
    Rng rng(6);
    std::vector<GaussianMixture> draws;
    for (int i = 0; i < 300; ++i) {
        const auto w = rng.dirichlet(std::vector<double>{1.0, 1.0, 1.0});
        draws.emplace_back(w, std::vector<double>{rng.normal(), rng.normal(3.0, 1.0), rng.normal(-3.0, 1.0)},
                           std::vector<double>{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)});
    }
    const std::vector<double> probs{0.05, 0.5, 0.95};
    const auto s = summarize_mixtures_serial(draws, 0.0, probs);
    const auto p = summarize_mixtures(draws, 0.0, probs);
    REQUIRE(s.size() == draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        CHECK(s[i].mean == p[i].mean);
        CHECK(s[i].cdf_at == p[i].cdf_at);
        CHECK(s[i].quantiles == p[i].quantiles);
        const auto w = draws[i].weights();
        const auto m = draws[i].means();
        const auto sd = draws[i].sds();
        double mean = 0.0, cdf = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            mean += w[k] * m[k];
            cdf += w[k] * normal_cdf(-m[k] / sd[k]);
        }
        CHECK(s[i].mean == doctest::Approx(mean).epsilon(1e-14));
        CHECK(s[i].cdf_at == doctest::Approx(cdf).epsilon(1e-12));
        for (std::size_t q = 0; q < probs.size(); ++q) {
            double back = 0.0;
            for (std::size_t k = 0; k < 3; ++k) back += w[k] * normal_cdf((s[i].quantiles[q] - m[k]) / sd[k]);
            CHECK(back == doctest::Approx(probs[q]).epsilon(1e-9));
        }
    }
}

TEST_CASE("trapezoid and grid") {
    const auto g = linear_grid(0.0, 1.0, 1001);
    CHECK(g[500] == doctest::Approx(0.5));
    std::vector<double> y(g.size());
    std::transform(g.begin(), g.end(), y.begin(), [](double x) { return x * x; });
    CHECK(trapezoid(g, y) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK_THROWS_AS(linear_grid(0.0, 1.0, 1), std::invalid_argument);
}
