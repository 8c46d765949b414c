#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace icedist {

/// Cross-sectional records: outcome y, binary exposure a, confounders l
/// (one row per individual, one column per confounder).
struct Dataset {
    Eigen::VectorXd y;
    Eigen::VectorXi a;
    Eigen::MatrixXd l;
    std::vector<std::string> confounder_names;

    std::size_t size() const { return static_cast<std::size_t>(y.size()); }
    std::size_t n_confounders() const { return confounder_names.size(); }
    std::size_t n_exposed() const;

    /// Column index of a confounder; throws std::out_of_range naming it.
    std::size_t column(std::string_view name) const;

    /// Shape and domain checks (a in {0,1}, finite values, matching widths).
    void validate() const;

    /// Positivity at the sample level: both arms non-empty.
    void require_both_arms() const;

    /// Keeps only the named confounder columns, in the order given.
    Dataset with_confounders(std::span<const std::string> names) const;
};

/// Names l_1..l_p used when a caller does not label confounders.
std::vector<std::string> default_confounder_names(std::size_t p);

/// CSV with header `y,a,<confounder names...>`.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace icedist
