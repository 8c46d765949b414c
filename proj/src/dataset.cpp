#include "icedist/dataset.hpp"

#include <cmath>
#include <stdexcept>

#include "icedist/csv.hpp"

namespace icedist {

std::size_t Dataset::n_exposed() const {
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) n += a[i] == 1 ? 1 : 0;
    return n;
}

std::size_t Dataset::column(std::string_view name) const {
    for (std::size_t j = 0; j < confounder_names.size(); ++j) {
        if (confounder_names[j] == name) return j;
    }
    throw std::out_of_range("dataset has no confounder named '" + std::string(name) + "'");
}

void Dataset::validate() const {
    const auto n = y.size();
    if (a.size() != n || l.rows() != n) {
        throw std::invalid_argument("dataset: y, a and confounder rows differ in length");
    }
    if (static_cast<std::size_t>(l.cols()) != confounder_names.size()) {
        throw std::invalid_argument("dataset: confounder vectors do not match the confounder names");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a[i] != 0 && a[i] != 1) {
            throw std::invalid_argument("dataset: exposure of record " + std::to_string(i + 1) + " is not 0/1");
        }
        if (!std::isfinite(y[i])) {
            throw std::invalid_argument("dataset: outcome of record " + std::to_string(i + 1) + " is not finite");
        }
    }
    if (!l.allFinite()) throw std::invalid_argument("dataset: non-finite confounder value");
}

void Dataset::require_both_arms() const {
    const std::size_t n1 = n_exposed();
    if (n1 == 0) throw std::invalid_argument("dataset has no exposed individuals (a = 1)");
    if (n1 == size()) throw std::invalid_argument("dataset has no unexposed individuals (a = 0)");
}

Dataset Dataset::with_confounders(std::span<const std::string> names) const {
    Dataset out;
    out.y = y;
    out.a = a;
    out.l.resize(l.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        out.l.col(static_cast<Eigen::Index>(j)) = l.col(static_cast<Eigen::Index>(column(names[j])));
    }
    out.confounder_names.assign(names.begin(), names.end());
    return out;
}

std::vector<std::string> default_confounder_names(std::size_t p) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) names.push_back("l_" + std::to_string(j + 1));
    return names;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    if (t.header.size() < 2 || t.header[0] != "y" || t.header[1] != "a") {
        throw CsvError(path.string() + ": header must start with 'y,a'");
    }
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    const auto p = static_cast<Eigen::Index>(t.header.size() - 2);
    Dataset ds;
    ds.y.resize(n);
    ds.a.resize(n);
    ds.l.resize(n, p);
    ds.confounder_names.assign(t.header.begin() + 2, t.header.end());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        ds.y[i] = row[0];
        if (row[1] != 0.0 && row[1] != 1.0) {
            throw CsvError(path.string() + ":" + std::to_string(i + 2) + ": exposure 'a' must be 0 or 1");
        }
        ds.a[i] = static_cast<int>(row[1]);
        for (Eigen::Index j = 0; j < p; ++j) ds.l(i, j) = row[static_cast<std::size_t>(j + 2)];
    }
    ds.validate();
    return ds;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    CsvTable t;
    t.header = {"y", "a"};
    t.header.insert(t.header.end(), ds.confounder_names.begin(), ds.confounder_names.end());
    t.rows.reserve(ds.size());
    for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
        std::vector<double> row{ds.y[i], static_cast<double>(ds.a[i])};
        for (Eigen::Index j = 0; j < ds.l.cols(); ++j) row.push_back(ds.l(i, j));
        t.rows.push_back(std::move(row));
    }
    write_csv(t, path);
}

}  // namespace icedist
