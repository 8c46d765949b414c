#include "icedist/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>

#include "icedist/stats.hpp"

namespace icedist {

double silverman_bandwidth(std::span<const double> data) {
    if (data.size() < 2) throw std::invalid_argument("bandwidth: need at least two values");
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const double sd = sd_of(sorted);
    const double iqr = percentile_sorted(sorted, 0.75) - percentile_sorted(sorted, 0.25);
    double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    if (!(spread > 0.0)) spread = 1.0;
    return 0.9 * spread * std::pow(static_cast<double>(data.size()), -0.2);
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
    if (points < 2) throw std::invalid_argument("grid: need at least two points");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) {
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return g;
}

std::vector<double> kde_grid(std::span<const double> data, double bandwidth, std::size_t points) {
    if (data.empty()) throw std::invalid_argument("kde grid: empty data");
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
    return linear_grid(*mn - 3.0 * bandwidth, *mx + 3.0 * bandwidth, points);
}

std::vector<double> kde_serial(std::span<const double> data, double bandwidth, std::span<const double> grid) {
    if (data.empty()) throw std::invalid_argument("kde: empty data");
    std::vector<double> out(grid.size(), 0.0);
    const double scale = 1.0 / (static_cast<double>(data.size()) * bandwidth);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double x : data) acc += normal_pdf((grid[g] - x) / bandwidth);
        out[g] = acc * scale;
    }
    return out;
}

std::vector<double> kde(std::span<const double> data, double bandwidth, std::span<const double> grid) {
    if (data.empty()) throw std::invalid_argument("kde: empty data");
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out(grid.size(), 0.0);
    const double scale = 1.0 / (static_cast<double>(sorted.size()) * bandwidth);
    const double reach = 8.0 * bandwidth;
    const auto count = static_cast<long>(grid.size());
#pragma omp parallel for schedule(static)
    for (long g = 0; g < count; ++g) {
        const double at = grid[static_cast<std::size_t>(g)];
        auto it = std::lower_bound(sorted.begin(), sorted.end(), at - reach);
        const auto end = std::upper_bound(it, sorted.end(), at + reach);
        double acc = 0.0;
        for (; it != end; ++it) acc += normal_pdf((at - *it) / bandwidth);
        out[static_cast<std::size_t>(g)] = acc * scale;
    }
    return out;
}

namespace {

// P(a < Z <= b) for a standard normal, accurate in both tails.
double normal_mass(double a, double b) {
    if (a > 0.0) return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
    if (b < 0.0) return 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
    return normal_cdf(b) - normal_cdf(a);
}

double grid_step(std::span<const double> grid) {
    if (grid.size() < 2) throw std::invalid_argument("kde: cell averages need at least two grid points");
    return (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
}

}  // namespace

std::vector<double> kde_cell_serial(std::span<const double> data, double bandwidth, std::span<const double> grid) {
    if (data.empty()) throw std::invalid_argument("kde: empty data");
    const double half = 0.5 * grid_step(grid);
    std::vector<double> out(grid.size(), 0.0);
    const double scale = 1.0 / (static_cast<double>(data.size()) * 2.0 * half);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double x : data) acc += normal_mass((grid[g] - half - x) / bandwidth, (grid[g] + half - x) / bandwidth);
        out[g] = acc * scale;
    }
    return out;
}

std::vector<double> kde_cell(std::span<const double> data, double bandwidth, std::span<const double> grid) {
    if (data.empty()) throw std::invalid_argument("kde: empty data");
    const double half = 0.5 * grid_step(grid);
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out(grid.size(), 0.0);
    const double scale = 1.0 / (static_cast<double>(sorted.size()) * 2.0 * half);
    const double reach = 8.0 * bandwidth + half;
    const auto count = static_cast<long>(grid.size());
#pragma omp parallel for schedule(static)
    for (long g = 0; g < count; ++g) {
        const double at = grid[static_cast<std::size_t>(g)];
        auto it = std::lower_bound(sorted.begin(), sorted.end(), at - reach);
        const auto end = std::upper_bound(it, sorted.end(), at + reach);
        double acc = 0.0;
        for (; it != end; ++it) acc += normal_mass((at - half - *it) / bandwidth, (at + half - *it) / bandwidth);
        out[static_cast<std::size_t>(g)] = acc * scale;
    }
    return out;
}

namespace {

void band_column(const Eigen::MatrixXd& curves, Eigen::Index c, double lo_q, double hi_q, std::vector<double>& col,
                 Band& b) {
    col.resize(static_cast<std::size_t>(curves.rows()));
    for (Eigen::Index r = 0; r < curves.rows(); ++r) col[static_cast<std::size_t>(r)] = curves(r, c);
    std::sort(col.begin(), col.end());
    const auto k = static_cast<std::size_t>(c);
    b.mean[k] = curves.col(c).mean();
    b.lo[k] = percentile_sorted(col, lo_q);
    b.hi[k] = percentile_sorted(col, hi_q);
}

Band make_band(const Eigen::MatrixXd& curves) {
    if (curves.rows() == 0) throw std::invalid_argument("band: no curves");
    Band b;
    const auto n = static_cast<std::size_t>(curves.cols());
    b.mean.resize(n);
    b.lo.resize(n);
    b.hi.resize(n);
    return b;
}

}  // namespace

Band pointwise_band_serial(const Eigen::MatrixXd& curves, double lo_q, double hi_q) {
    Band b = make_band(curves);
    std::vector<double> col;
    for (Eigen::Index c = 0; c < curves.cols(); ++c) band_column(curves, c, lo_q, hi_q, col, b);
    return b;
}

Band pointwise_band(const Eigen::MatrixXd& curves, double lo_q, double hi_q) {
    Band b = make_band(curves);
    const Eigen::Index cols = curves.cols();
#pragma omp parallel
    {
        std::vector<double> col;
#pragma omp for schedule(static)
        for (Eigen::Index c = 0; c < cols; ++c) band_column(curves, c, lo_q, hi_q, col, b);
    }
    return b;
}

namespace {

MixtureSummary summarize_one(const GaussianMixture& gm, double at, std::span<const double> probs) {
    MixtureSummary s;
    s.mean = gm.mean();
    s.cdf_at = gm.cdf(at);
    s.quantiles.reserve(probs.size());
    for (double q : probs) s.quantiles.push_back(gm.quantile(q));
    return s;
}

}  // namespace

std::vector<MixtureSummary> summarize_mixtures_serial(std::span<const GaussianMixture> draws, double at,
                                                      std::span<const double> probs) {
    std::vector<MixtureSummary> out;
    out.reserve(draws.size());
    for (const auto& gm : draws) out.push_back(summarize_one(gm, at, probs));
    return out;
}

std::vector<MixtureSummary> summarize_mixtures(std::span<const GaussianMixture> draws, double at,
                                               std::span<const double> probs) {
    std::vector<MixtureSummary> out(draws.size());
    const auto count = static_cast<long>(draws.size());
    std::vector<std::exception_ptr> errors(draws.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = summarize_one(draws[k], at, probs);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return acc;
}

}  // namespace icedist
