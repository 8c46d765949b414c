#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "icedist/mixture.hpp"

// Numerical kernels with an OpenMP implementation and a plain serial
// reference of the same computation.

namespace icedist {

/// Silverman's rule: 0.9 min(sd, IQR/1.34) n^(-1/5). Falls back to sd (or
/// 1) when the IQR or sd is zero.
double silverman_bandwidth(std::span<const double> data);

/// `points` evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

/// Grid spanning the data range widened by three bandwidths.
std::vector<double> kde_grid(std::span<const double> data, double bandwidth, std::size_t points = 512);

/// Gaussian KDE, direct double loop over grid and data.
std::vector<double> kde_serial(std::span<const double> data, double bandwidth, std::span<const double> grid);

/// Gaussian KDE on sorted data, skipping kernels beyond 8 bandwidths;
/// grid points are processed in parallel. Agrees with kde_serial to ~1e-14.
std::vector<double> kde(std::span<const double> data, double bandwidth, std::span<const double> grid);

/// Average of the Gaussian KDE over the cell [g - d/2, g + d/2] around each
/// point of an evenly spaced grid with step d. Equals the point value up to
/// O(d^2 / h^2) and keeps the trapezoidal integral accurate when the step
/// exceeds the bandwidth.
std::vector<double> kde_cell_serial(std::span<const double> data, double bandwidth, std::span<const double> grid);
std::vector<double> kde_cell(std::span<const double> data, double bandwidth, std::span<const double> grid);

/// Pointwise lower/upper percentiles (and mean) of a set of curves, one
/// curve per row.
struct Band {
    std::vector<double> mean, lo, hi;
};
Band pointwise_band_serial(const Eigen::MatrixXd& curves, double lo_q, double hi_q);
Band pointwise_band(const Eigen::MatrixXd& curves, double lo_q, double hi_q);

/// Functionals of one mixture draw: mean, cdf at `at`, and quantiles.
struct MixtureSummary {
    double mean = 0.0;
    double cdf_at = 0.0;
    std::vector<double> quantiles;
};

std::vector<MixtureSummary> summarize_mixtures_serial(std::span<const GaussianMixture> draws, double at,
                                                      std::span<const double> probs);
std::vector<MixtureSummary> summarize_mixtures(std::span<const GaussianMixture> draws, double at,
                                               std::span<const double> probs);

/// Trapezoidal integral of y over an ascending grid.
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace icedist
