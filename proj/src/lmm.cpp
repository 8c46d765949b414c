#include "icedist/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "icedist/stats.hpp"

namespace icedist {

Dichotomized dichotomize(const Dataset& ds, const std::string& name) {
    const auto x = ds.l.col(static_cast<Eigen::Index>(ds.column(name)));
    const auto n = x.size();
    Dichotomized out;
    if (n == 0) throw std::invalid_argument("dichotomize: empty dataset");
    if (x.minCoeff() == x.maxCoeff()) throw std::invalid_argument("dichotomize: column '" + name + "' is constant");
    const bool binary = (x.array() == 0.0 || x.array() == 1.0).all();
    if (binary) {
        out.indicator = x;
        out.threshold = 0.5;
        out.was_binary = true;
        out.label = name;
        return out;
    }
    std::vector<double> values(x.data(), x.data() + n);
    const double med = percentile(values, 0.5);
    RunningMoments above, below;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (x[i] > med) above.push(ds.y[i]);
        if (x[i] < med) below.push(ds.y[i]);
    }
    out.threshold = med;
    out.above = below.n < 2 || (above.n >= 2 && above.variance() >= below.variance());
    out.indicator.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.indicator[i] = (out.above ? x[i] > med : x[i] < med) ? 1.0 : 0.0;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%s%c%g)", name.c_str(), out.above ? '>' : '<', med);
    out.label = buf;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Problem {
    Eigen::MatrixXd x;  // mean design
    Eigen::MatrixXd d;  // variance design, one column per component
    Eigen::VectorXd y;
};

struct Evaluation {
    double loglik = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;  // d loglik / d eta
    Eigen::VectorXd beta;
    Eigen::VectorXd var;   // component variances
};

Evaluation evaluate(const Problem& pb, const Eigen::VectorXd& eta) {
    Evaluation ev;
    ev.var = (eta.array().exp() + kVarianceFloor).matrix();
    ev.grad = Eigen::VectorXd::Zero(eta.size());
    if (!ev.var.allFinite()) return ev;
    const Eigen::VectorXd v = pb.d * ev.var;
    const Eigen::VectorXd sw = v.cwiseInverse().cwiseSqrt();
    const Eigen::MatrixXd xw = pb.x.array().colwise() * sw.array();
    const Eigen::VectorXd yw = pb.y.cwiseProduct(sw);
    ev.beta = xw.colPivHouseholderQr().solve(yw);
    const Eigen::VectorXd r = pb.y - pb.x * ev.beta;
    // Neumaier summation keeps line-search comparisons meaningful near the optimum.
    double ll = 0.0, carry = 0.0;
    Eigen::VectorXd score = Eigen::VectorXd::Zero(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double q = r[i] * r[i] / v[i];
        const double term = -kLogSqrt2Pi - 0.5 * std::log(v[i]) - 0.5 * q;
        const double t = ll + term;
        carry += std::abs(ll) >= std::abs(term) ? (ll - t) + term : (term - t) + ll;
        ll = t;
        score[i] = -0.5 * (1.0 - q) / v[i];
    }
    ll += carry;
    // beta is profiled out, so only the explicit variance dependence remains.
    ev.grad = (pb.d.transpose() * score).cwiseProduct(eta.array().exp().matrix());
    ev.loglik = std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
    return ev;
}

}  // namespace

LmmFit fit_lmm(const Dataset& ds, const LmmSpec& spec, int max_iter) {
    ds.validate();
    ds.require_both_arms();
    const auto n = static_cast<Eigen::Index>(ds.size());
    Problem pb;
    pb.y = ds.y;

    LmmFit fit;
    pb.x.resize(n, static_cast<Eigen::Index>(spec.fixed.size() + 2));
    pb.x.col(0).setOnes();
    fit.beta_names.push_back("intercept");
    for (std::size_t j = 0; j < spec.fixed.size(); ++j) {
        pb.x.col(static_cast<Eigen::Index>(j + 1)) = ds.l.col(static_cast<Eigen::Index>(ds.column(spec.fixed[j])));
        fit.beta_names.push_back(spec.fixed[j]);
    }
    pb.x.col(pb.x.cols() - 1) = ds.a.cast<double>();
    fit.beta_names.push_back("exposure");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(pb.x);
    if (qr.rank() < pb.x.cols()) {
        throw std::invalid_argument("fit_lmm: mean design is rank deficient (rank " + std::to_string(qr.rank()) +
                                    " < " + std::to_string(pb.x.cols()) + " columns)");
    }

    const Eigen::Index m = 1 + (spec.fix_exposure_variance ? 0 : 1) + static_cast<Eigen::Index>(spec.het.size());
    if (n <= pb.x.cols() + m) throw std::invalid_argument("fit_lmm: too few observations for the model");
    pb.d.resize(n, m);
    pb.d.col(0).setOnes();
    Eigen::Index col = 1;
    if (!spec.fix_exposure_variance) pb.d.col(col++) = ds.a.cast<double>();
    for (const auto& h : spec.het) {
        const Dichotomized dz = dichotomize(ds, h);
        pb.d.col(col++) = dz.indicator;
        fit.het_labels.push_back(dz.label);
    }

    // Start from OLS residual variances.
    const Eigen::VectorXd r0 = pb.y - pb.x * qr.solve(pb.y);
    RunningMoments unexposed, exposed;
    for (Eigen::Index i = 0; i < n; ++i) (ds.a[i] == 1 ? exposed : unexposed).push(r0[i]);
    const double s2 = std::max(unexposed.n > 1 ? unexposed.variance() : exposed.variance(), 1e-6);
    Eigen::VectorXd eta(m);
    eta[0] = std::log(s2);
    col = 1;
    if (!spec.fix_exposure_variance) eta[col++] = std::log(std::max(exposed.variance() - s2, 0.05 * s2));
    for (; col < m; ++col) eta[col] = std::log(0.05 * s2);

    Evaluation cur = evaluate(pb, eta);
    if (!std::isfinite(cur.loglik)) throw std::runtime_error("fit_lmm: non-finite log-likelihood at start");
    fit.loglik_trace.push_back(cur.loglik);

    // BFGS on f = -loglik over the log-variances.
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(m, m);
    bool scaled = false;
    int it = 0;
    for (; it < max_iter; ++it) {
        if (cur.grad.lpNorm<Eigen::Infinity>() < 1e-6) break;
        const Eigen::VectorXd gf = -cur.grad;
        Eigen::VectorXd dir = -hinv * gf;
        if (dir.dot(gf) >= 0.0) {
            hinv.setIdentity();
            dir = -gf;
        }
        const double longest = dir.lpNorm<Eigen::Infinity>();
        if (longest > 5.0) dir *= 5.0 / longest;
        const double slope = dir.dot(gf);

        bool accepted = false;
        Evaluation next;
        Eigen::VectorXd eta_next;
        for (double t = 1.0; t > 1e-12; t *= 0.5) {
            eta_next = eta + t * dir;
            next = evaluate(pb, eta_next);
            if (!std::isfinite(next.loglik)) continue;
            const double drop = cur.loglik - next.loglik;  // increase in f
            if (drop <= 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            // Near the optimum the Armijo gain sinks below rounding; a level
            // step is still taken if it shrinks the gradient.
            if (drop <= 0.0 &&
                next.grad.lpNorm<Eigen::Infinity>() < cur.grad.lpNorm<Eigen::Infinity>()) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        const Eigen::VectorXd s = eta_next - eta;
        const Eigen::VectorXd yv = cur.grad - next.grad;
        const double sy = s.dot(yv);
        if (sy > 1e-14) {
            if (!scaled) {
                hinv = Eigen::MatrixXd::Identity(m, m) * (sy / yv.squaredNorm());
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m, m);
            hinv = (id - rho * s * yv.transpose()) * hinv * (id - rho * yv * s.transpose()) + rho * s * s.transpose();
        }
        eta = eta_next;
        cur = std::move(next);
        fit.loglik_trace.push_back(cur.loglik);
    }

    fit.iterations = it;
    fit.grad_norm = cur.grad.lpNorm<Eigen::Infinity>();
    fit.converged = fit.grad_norm < 1e-6;
    fit.beta = cur.beta;
    fit.loglik = cur.loglik;
    col = 0;
    fit.var_resid = cur.var[col++];
    fit.var_z1 = spec.fix_exposure_variance ? 0.0 : cur.var[col++];
    for (; col < m; ++col) fit.var_het.push_back(cur.var[col]);

    const Eigen::VectorXd w = (pb.d * cur.var).cwiseInverse();
    const Eigen::MatrixXd info = pb.x.transpose() * w.asDiagonal() * pb.x;
    fit.beta_cov = info.ldlt().solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    return fit;
}

Json lmm_fit_to_json(const LmmFit& fit) {
    Json j;
    Json beta;
    for (std::size_t k = 0; k < fit.beta_names.size(); ++k) {
        beta[fit.beta_names[k]] = fit.beta[static_cast<Eigen::Index>(k)];
    }
    j["beta"] = std::move(beta);
    j["exposure_effect"] = fit.exposure_effect();
    j["var_z1"] = fit.var_z1;
    Json het = Json::object();
    for (std::size_t k = 0; k < fit.het_labels.size(); ++k) het[fit.het_labels[k]] = fit.var_het[k];
    j["var_het"] = std::move(het);
    j["var_resid"] = fit.var_resid;
    j["loglik"] = fit.loglik;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["grad_norm"] = fit.grad_norm;
    return j;
}

// ---------------------------------------------------------------------------

namespace {

double relative_change(double old_value, double new_value) {
    return std::abs(new_value - old_value) / std::abs(old_value);
}

}  // namespace

SelectionResult select_confounders(const Dataset& ds, const std::vector<std::string>& candidates,
                                   double mean_threshold, double var_threshold) {
    if (candidates.empty()) throw std::invalid_argument("select_confounders: candidate list is empty");
    std::vector<std::string> ordered = candidates;
    std::stable_sort(ordered.begin(), ordered.end(), [&ds](const std::string& a, const std::string& b) {
        return ds.column(a) < ds.column(b);
    });
    SelectionResult res;

    // Phase 1: backward elimination on E[Z1].
    std::vector<std::string> kept = ordered;
    for (int round = 1; !kept.empty(); ++round) {
        const double current = fit_lmm(ds, LmmSpec{kept, {}}).exposure_effect();
        std::size_t best = 0;
        double best_change = std::numeric_limits<double>::max();
        std::vector<SelectionStep> steps;
        for (std::size_t c = 0; c < kept.size(); ++c) {
            std::vector<std::string> reduced = kept;
            reduced.erase(reduced.begin() + static_cast<long>(c));
            const double value = fit_lmm(ds, LmmSpec{reduced, {}}).exposure_effect();
            const double change = relative_change(current, value);
            steps.push_back({"mean", round, kept[c], current, value, change, "kept"});
            // Changes equal up to rounding count as ties and keep the earlier candidate.
            if (change < best_change - 1e-12 * std::max(1.0, best_change)) {
                best_change = change;
                best = c;
            }
        }
        const bool drop = best_change < mean_threshold;
        if (drop) steps[best].decision = "removed";
        res.trace.insert(res.trace.end(), steps.begin(), steps.end());
        if (!drop) break;
        kept.erase(kept.begin() + static_cast<long>(best));
    }

    // Phase 2: forward addition of dichotomized random effects on var(Z1).
    std::vector<std::string> selected = kept;
    for (int round = 1;; ++round) {
        std::vector<std::string> rest;
        for (const auto& c : ordered) {
            if (std::find(selected.begin(), selected.end(), c) == selected.end()) rest.push_back(c);
        }
        if (rest.empty()) break;
        const double current = fit_lmm(ds, LmmSpec{selected, selected}).var_z1;
        std::size_t best = 0;
        double best_change = -1.0;
        std::vector<SelectionStep> steps;
        for (std::size_t c = 0; c < rest.size(); ++c) {
            std::vector<std::string> grown = selected;
            grown.push_back(rest[c]);
            const double value = fit_lmm(ds, LmmSpec{grown, grown}).var_z1;
            const double change = relative_change(current, value);
            steps.push_back({"variance", round, rest[c], current, value, change, "not added"});
            if (change > best_change) {
                best_change = change;
                best = c;
            }
        }
        const bool add = best_change > var_threshold;
        if (add) steps[best].decision = "added";
        res.trace.insert(res.trace.end(), steps.begin(), steps.end());
        if (!add) break;
        selected.push_back(rest[best]);
    }

    // Report in column order.
    std::stable_sort(selected.begin(), selected.end(), [&ds](const std::string& a, const std::string& b) {
        return ds.column(a) < ds.column(b);
    });
    res.selected = selected;
    res.final_fit = fit_lmm(ds, LmmSpec{selected, selected});
    return res;
}

Json selection_to_json(const SelectionResult& result) {
    Json j;
    j["selected"] = result.selected;
    Json trace = Json::array();
    for (const auto& s : result.trace) {
        trace.push_back(Json{{"phase", s.phase},
                             {"round", s.round},
                             {"candidate", s.candidate},
                             {"old_value", s.old_value},
                             {"new_value", s.new_value},
                             {"relative_change", s.relative_change},
                             {"decision", s.decision}});
    }
    j["trace"] = std::move(trace);
    j["final_fit"] = lmm_fit_to_json(result.final_fit);
    return j;
}

}  // namespace icedist
