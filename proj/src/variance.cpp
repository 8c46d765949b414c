#include "icedist/variance.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "icedist/lmm.hpp"
#include "icedist/stats.hpp"

namespace icedist {

Stratification Stratification::constant(std::size_t n) {
    Stratification s;
    s.labels = {"all"};
    s.codes.assign(n, 0);
    return s;
}

Stratification stratify(const Dataset& ds, const std::vector<std::string>& names, std::size_t max_levels) {
    const std::size_t n = ds.size();
    if (names.empty()) return Stratification::constant(n);
    std::vector<std::vector<double>> keys(n);
    std::vector<std::function<std::string(double)>> describe;
    for (const auto& name : names) {
        const auto x = ds.l.col(static_cast<Eigen::Index>(ds.column(name)));
        const std::set<double> levels(x.data(), x.data() + x.size());
        if (levels.size() <= max_levels) {
            for (std::size_t i = 0; i < n; ++i) keys[i].push_back(x[static_cast<Eigen::Index>(i)]);
            describe.push_back([name](double v) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "%s=%g", name.c_str(), v);
                return std::string(buf);
            });
        } else {
            const Dichotomized dz = dichotomize(ds, name);
            for (std::size_t i = 0; i < n; ++i) keys[i].push_back(dz.indicator[static_cast<Eigen::Index>(i)]);
            describe.push_back([label = dz.label](double v) { return label + "=" + (v > 0.5 ? "1" : "0"); });
        }
    }
    std::map<std::vector<double>, int> index;
    for (const auto& k : keys) index.emplace(k, 0);
    Stratification s;
    for (auto& [k, code] : index) {
        code = static_cast<int>(s.labels.size());
        std::string label;
        for (std::size_t j = 0; j < k.size(); ++j) label += (j ? "," : "") + describe[j](k[j]);
        s.labels.push_back(label);
    }
    s.codes.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.codes[i] = index.at(keys[i]);
    return s;
}

namespace {

ArmMoments moments_where(const Dataset& ds, const std::vector<int>* codes, int code, const std::string& label) {
    // Two-pass mean and variance in index order, shared by the stratified
    // and unstratified paths so that one-stratum results coincide exactly.
    ArmMoments m;
    m.stratum = label;
    double s1 = 0.0, s0 = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (codes && (*codes)[i] != code) continue;
        const auto r = static_cast<Eigen::Index>(i);
        if (ds.a[r] == 1) {
            ++m.n1;
            s1 += ds.y[r];
        } else {
            ++m.n0;
            s0 += ds.y[r];
        }
    }
    if (m.n1 < 2 || m.n0 < 2) {
        throw std::invalid_argument("stratum '" + label + "' has fewer than 2 observations in an arm (n1=" +
                                    std::to_string(m.n1) + ", n0=" + std::to_string(m.n0) + ")");
    }
    m.mean1 = s1 / static_cast<double>(m.n1);
    m.mean0 = s0 / static_cast<double>(m.n0);
    double q1 = 0.0, q0 = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (codes && (*codes)[i] != code) continue;
        const auto r = static_cast<Eigen::Index>(i);
        if (ds.a[r] == 1) {
            q1 += (ds.y[r] - m.mean1) * (ds.y[r] - m.mean1);
        } else {
            q0 += (ds.y[r] - m.mean0) * (ds.y[r] - m.mean0);
        }
    }
    m.var1 = q1 / static_cast<double>(m.n1 - 1);
    m.var0 = q0 / static_cast<double>(m.n0 - 1);
    return m;
}

VarianceRow make_row(const ArmMoments& m) {
    VarianceRow row;
    row.moments = m;
    row.test = heterogeneity_test(m);
    row.lower_bound = cs_lower_bound(m.var1, m.var0);
    row.additive = additive_ice_variance(m);
    row.additive_negative = row.additive < 0.0;
    if (std::abs(m.mean0) > 1e-12) row.multiplicative = multiplicative_ice_variance(m);
    return row;
}

Json row_to_json(const VarianceRow& r) {
    Json j;
    j["stratum"] = r.moments.stratum;
    j["n1"] = r.moments.n1;
    j["n0"] = r.moments.n0;
    j["mean1"] = r.moments.mean1;
    j["mean0"] = r.moments.mean0;
    j["var1"] = r.moments.var1;
    j["var0"] = r.moments.var0;
    j["variance_ratio"] = r.test.variance_ratio;
    j["p_value"] = r.test.p_value;
    j["p_value_one_sided"] = r.test.p_value_one_sided;
    j["heterogeneity"] = r.test.flag;
    j["lower_bound"] = r.lower_bound;
    j["additive"] = r.additive;
    j["additive_negative"] = r.additive_negative;
    j["multiplicative"] = r.multiplicative ? Json(*r.multiplicative) : Json(nullptr);
    return j;
}

}  // namespace

ArmMoments arm_moments(const Dataset& ds) { return moments_where(ds, nullptr, 0, "all"); }

std::vector<ArmMoments> arm_moments(const Dataset& ds, const Stratification& strata) {
    if (strata.codes.size() != ds.size()) throw std::invalid_argument("stratification does not match the dataset");
    std::vector<ArmMoments> out;
    for (std::size_t s = 0; s < strata.labels.size(); ++s) {
        out.push_back(moments_where(ds, &strata.codes, static_cast<int>(s), strata.labels[s]));
    }
    return out;
}

HeterogeneityTest heterogeneity_test(const ArmMoments& mom) {
    HeterogeneityTest t;
    t.stratum = mom.stratum;
    if (mom.n1 < 2 || mom.n0 < 2) throw std::invalid_argument("heterogeneity test needs 2 observations per arm");
    if (mom.var0 == 0.0 && mom.var1 == 0.0) return t;
    t.variance_ratio = mom.var1 / mom.var0;
    if (!std::isfinite(t.variance_ratio)) {
        t.p_value = 0.0;
        t.p_value_one_sided = 0.0;
        t.flag = true;
        return t;
    }
    const boost::math::fisher_f f(static_cast<double>(mom.n1 - 1), static_cast<double>(mom.n0 - 1));
    const double upper = boost::math::cdf(boost::math::complement(f, t.variance_ratio));
    const double lower = boost::math::cdf(f, t.variance_ratio);
    t.p_value_one_sided = upper;
    t.p_value = std::min(1.0, 2.0 * std::min(upper, lower));
    t.flag = upper < 0.05;
    return t;
}

HeterogeneityReport heterogeneity_test(const Dataset& ds, const std::optional<Stratification>& strata) {
    HeterogeneityReport r;
    r.overall = heterogeneity_test(arm_moments(ds));
    if (strata) {
        for (const auto& m : arm_moments(ds, *strata)) r.strata.push_back(heterogeneity_test(m));
    }
    return r;
}

double cs_lower_bound(double var1, double var0) {
    if (var1 < 0.0 || var0 < 0.0) throw std::invalid_argument("cs_lower_bound: variances must be >= 0");
    const double d = std::sqrt(var1) - std::sqrt(var0);
    return d * d;
}

double additive_ice_variance(const ArmMoments& mom) { return mom.var1 - mom.var0; }

double multiplicative_ice_variance(const ArmMoments& mom) {
    if (std::abs(mom.mean0) <= 1e-12) {
        throw std::domain_error("multiplicative_ice_variance: unexposed mean is zero");
    }
    return mom.var1 + (1.0 - 2.0 * mom.mean1 / mom.mean0) * mom.var0;
}

VarianceReport variance_report(const Dataset& ds, const std::optional<Stratification>& strata) {
    VarianceReport r;
    r.overall = make_row(arm_moments(ds));
    if (strata) {
        for (const auto& m : arm_moments(ds, *strata)) r.strata.push_back(make_row(m));
    }
    return r;
}

Json variance_report_to_json(const VarianceReport& report) {
    Json j;
    j["overall"] = row_to_json(report.overall);
    Json strata = Json::array();
    for (const auto& r : report.strata) strata.push_back(row_to_json(r));
    j["strata"] = std::move(strata);
    j["assumptions"] = {
        {"heterogeneity_test", "F test on arm variances; assumes normal outcomes within arm"},
        {"additive", "effect independent of the unexposed outcome given the stratum"},
        {"multiplicative", "Y1 = Y0 * U with U independent of Y0 given the stratum"},
    };
    return j;
}

CsvTable lower_bound_grid(double var0_max, double diff_max, std::size_t steps) {
    if (steps < 2) throw std::invalid_argument("lower_bound_grid: steps must be >= 2");
    if (var0_max < 0.0 || diff_max < 0.0) throw std::invalid_argument("lower_bound_grid: ranges must be >= 0");
    CsvTable t;
    t.header = {"var0", "diff", "var1", "lower_bound"};
    for (std::size_t i = 0; i < steps; ++i) {
        const double v0 = var0_max * static_cast<double>(i) / static_cast<double>(steps - 1);
        for (std::size_t k = 0; k < steps; ++k) {
            const double diff = diff_max * static_cast<double>(k) / static_cast<double>(steps - 1);
            t.rows.push_back({v0, diff, v0 + diff, cs_lower_bound(v0 + diff, v0)});
        }
    }
    return t;
}

}  // namespace icedist
