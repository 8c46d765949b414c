#include "icedist/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "icedist/lmm.hpp"
#include "icedist/mixture.hpp"
#include "icedist/stats.hpp"

namespace icedist {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinResidualWeight = 1e-6;

double dirichlet_logpdf(std::span<const double> p, std::span<const double> alpha) {
    double out = 0.0, total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        out += (alpha[k] - 1.0) * std::log(p[k]) - std::lgamma(alpha[k]);
        total += alpha[k];
    }
    return out + std::lgamma(total);
}

bool in_scale_support(double s, double upper) { return s > 0.0 && s <= upper; }

// Log density of log(s) for s ~ U(0, upper] with n normal observations of
// sum of squares ss at sd s; the +eta term is the Jacobian.
double log_scale_conditional(double eta, double n, double ss, double upper) {
    if (eta > std::log(upper)) return kNegInf;
    return -n * eta - 0.5 * ss * std::exp(-2.0 * eta) + eta;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> AugmentedState::flatten(const ParameterLayout& layout) const {
    std::vector<double> out(layout.size());
    for (std::size_t i = 0; i < layout.n_beta; ++i) out[layout.beta(i)] = beta[static_cast<Eigen::Index>(i)];
    for (std::size_t k = 0; k < layout.k_effect; ++k) {
        out[layout.weight(k)] = p[k];
        out[layout.mean(k)] = mu[k];
        out[layout.sd(k)] = tau[k];
    }
    if (layout.k_residual == 1) {
        out[layout.res_sd(0)] = taut[0];
    } else {
        for (std::size_t m = 0; m < layout.k_residual; ++m) {
            out[layout.res_weight(m)] = pt[m];
            out[layout.res_mean(m)] = mut[m];
            out[layout.res_sd(m)] = taut[m];
        }
    }
    for (std::size_t j = 0; j < layout.n_het; ++j) out[layout.het_sd(j)] = het_sd[j];
    return out;
}

AugmentedState AugmentedState::from_flat(const ParameterLayout& layout, const std::vector<double>& values,
                                         std::size_t n) {
    if (values.size() != layout.size()) {
        throw std::invalid_argument("initial state has " + std::to_string(values.size()) + " values, expected " +
                                    std::to_string(layout.size()));
    }
    AugmentedState s;
    s.beta.resize(static_cast<Eigen::Index>(layout.n_beta));
    for (std::size_t i = 0; i < layout.n_beta; ++i) s.beta[static_cast<Eigen::Index>(i)] = values[layout.beta(i)];
    for (std::size_t k = 0; k < layout.k_effect; ++k) {
        s.p.push_back(values[layout.weight(k)]);
        s.mu.push_back(values[layout.mean(k)]);
        s.tau.push_back(values[layout.sd(k)]);
    }
    if (layout.k_residual == 1) {
        s.pt = {1.0};
        s.mut = {0.0};
        s.taut = {values[layout.res_sd(0)]};
    } else {
        for (std::size_t m = 0; m < layout.k_residual; ++m) {
            s.pt.push_back(values[layout.res_weight(m)]);
            s.mut.push_back(values[layout.res_mean(m)]);
            s.taut.push_back(values[layout.res_sd(m)]);
        }
    }
    for (std::size_t j = 0; j < layout.n_het; ++j) s.het_sd.push_back(values[layout.het_sd(j)]);
    const auto rows = static_cast<Eigen::Index>(n);
    s.z1 = Eigen::VectorXd::Zero(rows);
    s.c1.assign(n, 0);
    s.c0.assign(n, 0);
    s.zl = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(layout.n_het));
    return s;
}

ModelData ModelData::make(const Dataset& ds, const ModelSpec& model) {
    ModelData md;
    md.ds = &ds;
    const auto n = static_cast<Eigen::Index>(ds.size());
    md.x.resize(n, static_cast<Eigen::Index>(ds.n_confounders() + 1));
    md.x.col(0).setOnes();
    if (ds.n_confounders() > 0) md.x.rightCols(ds.l.cols()) = ds.l;
    md.h.resize(n, static_cast<Eigen::Index>(model.het_confounders.size()));
    for (std::size_t j = 0; j < model.het_confounders.size(); ++j) {
        const auto& name = model.het_confounders[j];
        (void)ds.column(name);
        if (n == 0) {
            md.het_labels.push_back(name);
            continue;
        }
        const Dichotomized dz = dichotomize(ds, name);
        md.h.col(static_cast<Eigen::Index>(j)) = dz.indicator;
        md.het_labels.push_back(dz.label);
    }
    return md;
}

double log_posterior(const AugmentedState& s, const ModelData& md, const ModelSpec& model, const PriorSpec& prior) {
    const Dataset& ds = *md.ds;
    const std::size_t n = ds.size();
    const std::size_t kk = static_cast<std::size_t>(model.effect_components());
    const std::size_t mm = static_cast<std::size_t>(model.residual_components());
    const double upper = prior.scale_prior_upper;
    const double v = prior.location_prior_var;

    for (double t : s.tau) if (!in_scale_support(t, upper)) return kNegInf;
    for (double t : s.taut) if (!in_scale_support(t, upper)) return kNegInf;
    for (double t : s.het_sd) if (!in_scale_support(t, upper)) return kNegInf;
    for (double w : s.p) if (!(w > 0.0)) return kNegInf;
    for (double w : s.pt) if (!(w > 0.0)) return kNegInf;

    double lp = 0.0;
    for (Eigen::Index i = 0; i < s.beta.size(); ++i) lp += normal_logpdf(s.beta[i], 0.0, v);
    for (std::size_t k = 0; k < kk; ++k) lp += normal_logpdf(s.mu[k], 0.0, v) - std::log(upper);
    const std::vector<double> alpha_k(kk, prior.dirichlet_alpha);
    if (kk > 1) lp += dirichlet_logpdf(s.p, alpha_k);
    for (std::size_t m = 0; m < mm; ++m) lp -= std::log(upper);
    if (mm > 1) {
        const std::vector<double> alpha_m(mm, prior.dirichlet_alpha);
        lp += dirichlet_logpdf(s.pt, alpha_m);
        for (std::size_t m = 0; m + 1 < mm; ++m) lp += normal_logpdf(s.mut[m], 0.0, v);
    }
    lp -= static_cast<double>(s.het_sd.size()) * std::log(upper);

    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        double mean = md.x.row(r).dot(s.beta);
        for (Eigen::Index j = 0; j < md.h.cols(); ++j) {
            if (md.h(r, j) > 0.5) {
                mean += s.zl(r, j);
                lp += normal_logpdf(s.zl(r, j), 0.0, s.het_sd[static_cast<std::size_t>(j)] *
                                                         s.het_sd[static_cast<std::size_t>(j)]);
            }
        }
        const auto m = static_cast<std::size_t>(s.c0[i]);
        if (m >= mm) return kNegInf;
        if (mm > 1) lp += std::log(s.pt[m]);
        if (ds.a[r] == 1) {
            const auto k = static_cast<std::size_t>(s.c1[i]);
            if (k >= kk) return kNegInf;
            lp += std::log(s.p[k]) + normal_logpdf(s.z1[r], s.mu[k], s.tau[k] * s.tau[k]);
            mean += s.z1[r];
        }
        lp += normal_logpdf(ds.y[r], mean + s.mut[m], s.taut[m] * s.taut[m]);
    }
    return std::isfinite(lp) ? lp : kNegInf;
}

double slice_sample(double x0, const std::function<double(double)>& logf, double width, int max_steps,
                    double upper, Rng& rng) {
    const double level = logf(x0) - rng.exponential();
    double lo = x0 - width * rng.uniform();
    double hi = lo + width;
    int j = static_cast<int>(std::floor(max_steps * rng.uniform()));
    int k = max_steps - 1 - j;
    while (j-- > 0 && logf(lo) > level) lo -= width;
    while (k-- > 0 && hi < upper && logf(hi) > level) hi += width;
    hi = std::min(hi, upper);
    for (;;) {
        const double x1 = rng.uniform(lo, hi);
        if (logf(x1) > level) return x1;
        if (x1 < x0) {
            lo = x1;
        } else {
            hi = x1;
        }
        if (hi - lo < 1e-300) return x0;
    }
}

// ---------------------------------------------------------------------------

AugmentedState initial_state(const Dataset& ds, const ModelData& md, const ModelSpec& model,
                             const PriorSpec& prior) {
    const auto kk = static_cast<std::size_t>(model.effect_components());
    const auto mm = static_cast<std::size_t>(model.residual_components());
    const std::size_t n = ds.size();
    const double cap = 0.99 * prior.scale_prior_upper;
    auto clamp_sd = [cap](double s) { return std::clamp(s, 1e-2, cap); };

    AugmentedState s;
    s.beta = Eigen::VectorXd::Zero(md.x.cols());
    double theta = 0.0, sd_z1 = 1.0, sd_resid = 1.0;
    std::vector<double> het(model.het_confounders.size(), 1.0);
    if (n > 0) {
        std::vector<std::string> fixed = ds.confounder_names;
        const LmmFit fit = fit_lmm(ds, LmmSpec{fixed, model.het_confounders});
        s.beta = fit.beta.head(fit.beta.size() - 1);
        theta = fit.exposure_effect();
        sd_z1 = clamp_sd(std::sqrt(fit.var_z1));
        sd_resid = clamp_sd(std::sqrt(fit.var_resid));
        for (std::size_t j = 0; j < het.size(); ++j) het[j] = clamp_sd(std::sqrt(fit.var_het[j]));
    }
    for (std::size_t k = 0; k < kk; ++k) {
        const double offset = kk == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(kk - 1);
        s.mu.push_back(theta + offset * sd_z1);
        s.tau.push_back(sd_z1);
        s.p.push_back(1.0 / static_cast<double>(kk));
    }
    s.pt.assign(mm, 1.0 / static_cast<double>(mm));
    s.mut.assign(mm, 0.0);
    s.taut.assign(mm, sd_resid);
    s.het_sd = het;
    const auto rows = static_cast<Eigen::Index>(n);
    s.z1 = Eigen::VectorXd::Constant(rows, theta);
    s.c1.assign(n, 0);
    s.c0.assign(n, 0);
    s.zl = Eigen::MatrixXd::Zero(rows, md.h.cols());
    return s;
}

// ---------------------------------------------------------------------------

namespace {

class Chain {
public:
    Chain(const ModelData& md, const ModelSpec& model, const PriorSpec& prior, AugmentedState init, Rng rng)
        : md_(md), ds_(*md.ds), prior_(prior), s_(std::move(init)), rng_(rng),
          n_(ds_.size()), kk_(static_cast<std::size_t>(model.effect_components())),
          mm_(static_cast<std::size_t>(model.residual_components())),
          jj_(static_cast<std::size_t>(md.h.cols())) {
        xtx_ = md_.x.transpose() * md_.x;
        resid_.resize(static_cast<Eigen::Index>(n_));
        logw_.resize(kk_ * mm_);
    }

    void sweep() {
        update_latents();
        update_beta();
        update_effect_means();
        update_effect_weights();
        update_scales();
        if (mm_ > 1) {
            update_residual_means();
            update_residual_weights();
        }
        check_state();
    }

    void record(ChainDraws& out, const ParameterLayout& layout, Eigen::Index row, Eigen::Index z1_row) {
        const std::vector<double> flat = s_.flatten(layout);
        for (std::size_t c = 0; c < flat.size(); ++c) out.params(row, static_cast<Eigen::Index>(c)) = flat[c];
        if (z1_row >= 0) {
            const GaussianMixture gm(s_.p, s_.mu, s_.tau);
            for (std::size_t i = 0; i < n_; ++i) out.z1(z1_row, static_cast<Eigen::Index>(i)) = gm.sample(rng_);
        }
    }

    std::size_t rejected() const { return rejected_; }

private:
    double het_var_sum(Eigen::Index r, std::size_t from) const {
        double v = 0.0;
        for (std::size_t j = from; j < jj_; ++j) {
            if (md_.h(r, static_cast<Eigen::Index>(j)) > 0.5) v += s_.het_sd[j] * s_.het_sd[j];
        }
        return v;
    }

    // Labels with z1 and the het effects integrated out, then z1 and the het
    // effects from their exact conditionals: one joint draw per individual.
    void update_latents() {
        for (std::size_t i = 0; i < n_; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double base = ds_.y[r] - md_.x.row(r).dot(s_.beta);
            const double het_var = het_var_sum(r, 0);
            std::size_t m = 0;
            double e;
            if (ds_.a[r] == 1) {
                std::size_t k = 0;
                if (kk_ * mm_ > 1) {
                    for (std::size_t a = 0; a < kk_; ++a) {
                        for (std::size_t b = 0; b < mm_; ++b) {
                            logw_[a * mm_ + b] =
                                std::log(s_.p[a]) + std::log(s_.pt[b]) +
                                normal_logpdf(base, s_.mu[a] + s_.mut[b],
                                              s_.tau[a] * s_.tau[a] + s_.taut[b] * s_.taut[b] + het_var);
                        }
                    }
                    const std::size_t pick = rng_.categorical_log(logw_);
                    k = pick / mm_;
                    m = pick % mm_;
                }
                const double ve = s_.taut[m] * s_.taut[m] + het_var;
                const double prior_prec = 1.0 / (s_.tau[k] * s_.tau[k]);
                const double prec = prior_prec + 1.0 / ve;
                const double mean = (s_.mu[k] * prior_prec + (base - s_.mut[m]) / ve) / prec;
                s_.z1[r] = mean + rng_.normal() / std::sqrt(prec);
                s_.c1[i] = static_cast<int>(k);
                e = base - s_.z1[r] - s_.mut[m];
            } else {
                if (mm_ > 1) {
                    for (std::size_t b = 0; b < mm_; ++b) {
                        logw_[b] = std::log(s_.pt[b]) +
                                   normal_logpdf(base, s_.mut[b], s_.taut[b] * s_.taut[b] + het_var);
                    }
                    m = rng_.categorical_log(std::span<const double>(logw_.data(), mm_));
                }
                e = base - s_.mut[m];
            }
            s_.c0[i] = static_cast<int>(m);
            for (std::size_t j = 0; j < jj_; ++j) {
                const auto cj = static_cast<Eigen::Index>(j);
                if (md_.h(r, cj) <= 0.5) continue;
                const double vrest = s_.taut[m] * s_.taut[m] + het_var_sum(r, j + 1);
                const double prec = 1.0 / (s_.het_sd[j] * s_.het_sd[j]) + 1.0 / vrest;
                s_.zl(r, cj) = e / vrest / prec + rng_.normal() / std::sqrt(prec);
                e -= s_.zl(r, cj);
            }
        }
    }

    double latent_offset(Eigen::Index r) const {
        double v = ds_.a[r] == 1 ? s_.z1[r] : 0.0;
        for (std::size_t j = 0; j < jj_; ++j) {
            const auto cj = static_cast<Eigen::Index>(j);
            if (md_.h(r, cj) > 0.5) v += s_.zl(r, cj);
        }
        return v;
    }

    void update_beta() {
        const Eigen::Index p = md_.x.cols();
        Eigen::MatrixXd prec;
        Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
        if (mm_ == 1) {
            const double w = 1.0 / (s_.taut[0] * s_.taut[0]);
            prec = xtx_ * w;
            for (std::size_t i = 0; i < n_; ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                b += md_.x.row(r).transpose() * ((ds_.y[r] - latent_offset(r)) * w);
            }
        } else {
            prec = Eigen::MatrixXd::Zero(p, p);
            for (std::size_t i = 0; i < n_; ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                const auto m = static_cast<std::size_t>(s_.c0[i]);
                const double w = 1.0 / (s_.taut[m] * s_.taut[m]);
                prec.selfadjointView<Eigen::Lower>().rankUpdate(md_.x.row(r).transpose(), w);
                b += md_.x.row(r).transpose() * ((ds_.y[r] - latent_offset(r) - s_.mut[m]) * w);
            }
            prec = prec.selfadjointView<Eigen::Lower>();
        }
        prec.diagonal().array() += 1.0 / prior_.location_prior_var;
        const Eigen::LLT<Eigen::MatrixXd> llt(prec);
        Eigen::VectorXd xi(p);
        for (Eigen::Index c = 0; c < p; ++c) xi[c] = rng_.normal();
        s_.beta = llt.solve(b) + llt.matrixU().solve(xi);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            resid_[r] = ds_.y[r] - md_.x.row(r).dot(s_.beta) - latent_offset(r);
        }
    }

    void update_effect_means() {
        counts_.assign(kk_, 0.0);
        sums_.assign(kk_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            if (ds_.a[static_cast<Eigen::Index>(i)] != 1) continue;
            const auto k = static_cast<std::size_t>(s_.c1[i]);
            counts_[k] += 1.0;
            sums_[k] += s_.z1[static_cast<Eigen::Index>(i)];
        }
        for (std::size_t k = 0; k < kk_; ++k) {
            const double t2 = s_.tau[k] * s_.tau[k];
            const double prec = counts_[k] / t2 + 1.0 / prior_.location_prior_var;
            s_.mu[k] = sums_[k] / t2 / prec + rng_.normal() / std::sqrt(prec);
        }
    }

    void update_effect_weights() {
        if (kk_ == 1) return;
        std::vector<double> alpha(kk_);
        for (std::size_t k = 0; k < kk_; ++k) alpha[k] = prior_.dirichlet_alpha + counts_[k];
        s_.p = rng_.dirichlet(alpha);
    }

    double sample_scale(double current, double count, double ss) {
        const double upper = prior_.scale_prior_upper;
        auto logf = [count, ss, upper](double eta) { return log_scale_conditional(eta, count, ss, upper); };
        return std::exp(slice_sample(std::log(current), logf, 1.0, 32, std::log(upper), rng_));
    }

    void update_scales() {
        std::vector<double> ss(kk_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            if (ds_.a[r] != 1) continue;
            const auto k = static_cast<std::size_t>(s_.c1[i]);
            const double d = s_.z1[r] - s_.mu[k];
            ss[k] += d * d;
        }
        for (std::size_t k = 0; k < kk_; ++k) s_.tau[k] = sample_scale(s_.tau[k], counts_[k], ss[k]);

        std::vector<double> cnt(mm_, 0.0), rss(mm_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto m = static_cast<std::size_t>(s_.c0[i]);
            const double d = resid_[static_cast<Eigen::Index>(i)] - s_.mut[m];
            cnt[m] += 1.0;
            rss[m] += d * d;
        }
        for (std::size_t m = 0; m < mm_; ++m) s_.taut[m] = sample_scale(s_.taut[m], cnt[m], rss[m]);

        for (std::size_t j = 0; j < jj_; ++j) {
            double c = 0.0, q = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                if (md_.h(r, static_cast<Eigen::Index>(j)) <= 0.5) continue;
                c += 1.0;
                q += s_.zl(r, static_cast<Eigen::Index>(j)) * s_.zl(r, static_cast<Eigen::Index>(j));
            }
            s_.het_sd[j] = sample_scale(s_.het_sd[j], c, q);
        }
    }

    void residual_stats() {
        rcount_.assign(mm_, 0.0);
        rsum_.assign(mm_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto m = static_cast<std::size_t>(s_.c0[i]);
            rcount_[m] += 1.0;
            rsum_[m] += resid_[static_cast<Eigen::Index>(i)];
        }
    }

    static double last_mean(const std::vector<double>& pt, const std::vector<double>& mut) {
        const std::size_t last = pt.size() - 1;
        double acc = 0.0;
        for (std::size_t m = 0; m < last; ++m) acc += pt[m] * mut[m];
        return -acc / pt[last];
    }

    // The constrained conditional of each free mean is Gaussian (the last
    // mean moves linearly with it), so it is drawn exactly.
    void update_residual_means() {
        residual_stats();
        const std::size_t last = mm_ - 1;
        const double tl2 = s_.taut[last] * s_.taut[last];
        for (std::size_t j = 0; j < last; ++j) {
            double others = 0.0;
            for (std::size_t m = 0; m < last; ++m) {
                if (m != j) others += s_.pt[m] * s_.mut[m];
            }
            const double c = -others / s_.pt[last];
            const double g = -s_.pt[j] / s_.pt[last];
            const double tj2 = s_.taut[j] * s_.taut[j];
            const double prec = rcount_[j] / tj2 + rcount_[last] * g * g / tl2 + 1.0 / prior_.location_prior_var;
            const double lin = rsum_[j] / tj2 + g * (rsum_[last] - rcount_[last] * c) / tl2;
            s_.mut[j] = lin / prec + rng_.normal() / std::sqrt(prec);
            s_.mut[last] = last_mean(s_.pt, s_.mut);
        }
    }

    // Terms of the last component's likelihood that depend on its mean.
    double last_loglik(const std::vector<double>& pt) const {
        const std::size_t last = mm_ - 1;
        const double m = last_mean(pt, s_.mut);
        return -(rcount_[last] * m * m - 2.0 * m * rsum_[last]) / (2.0 * s_.taut[last] * s_.taut[last]);
    }

    void update_residual_weights() {
        const std::size_t last = mm_ - 1;
        std::vector<double> post(mm_);
        for (std::size_t m = 0; m < mm_; ++m) post[m] = prior_.dirichlet_alpha + rcount_[m];

        // Independence proposal from the label-only conditional.
        std::vector<double> prop = rng_.dirichlet(post);
        if (prop[last] < kMinResidualWeight) {
            ++rejected_;
        } else if (std::log(rng_.uniform()) < last_loglik(prop) - last_loglik(s_.pt)) {
            s_.pt = prop;
        }

        // Local Dirichlet proposal centred on the current weights.
        const double kappa = 10.0 * static_cast<double>(n_) + 10.0;
        std::vector<double> fwd(mm_);
        for (std::size_t m = 0; m < mm_; ++m) fwd[m] = kappa * s_.pt[m];
        prop = rng_.dirichlet(fwd);
        if (prop[last] < kMinResidualWeight) {
            ++rejected_;
        } else {
            std::vector<double> back(mm_);
            for (std::size_t m = 0; m < mm_; ++m) back[m] = kappa * prop[m];
            const double log_ratio = dirichlet_logpdf(prop, post) + last_loglik(prop) -
                                     dirichlet_logpdf(s_.pt, post) - last_loglik(s_.pt) +
                                     dirichlet_logpdf(s_.pt, back) - dirichlet_logpdf(prop, fwd);
            if (std::log(rng_.uniform()) < log_ratio) s_.pt = prop;
        }
        s_.mut[last] = last_mean(s_.pt, s_.mut);
    }

    void check_state() const {
        bool ok = s_.beta.allFinite();
        for (const auto* v : {&s_.p, &s_.mu, &s_.tau, &s_.pt, &s_.mut, &s_.taut, &s_.het_sd}) {
            for (double x : *v) ok = ok && std::isfinite(x);
        }
        if (ok) return;
        std::ostringstream dump;
        dump << "sampler reached a non-finite state: beta=[" << s_.beta.transpose() << "]";
        auto put = [&dump](const char* name, const std::vector<double>& v) {
            dump << " " << name << "=[";
            for (std::size_t k = 0; k < v.size(); ++k) dump << (k ? " " : "") << v[k];
            dump << "]";
        };
        put("p", s_.p);
        put("mu", s_.mu);
        put("tau", s_.tau);
        put("pt", s_.pt);
        put("mut", s_.mut);
        put("taut", s_.taut);
        put("het_sd", s_.het_sd);
        throw std::runtime_error(dump.str());
    }

    const ModelData& md_;
    const Dataset& ds_;
    const PriorSpec& prior_;
    AugmentedState s_;
    Rng rng_;
    std::size_t n_, kk_, mm_, jj_;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd resid_;
    std::vector<double> logw_;
    std::vector<double> counts_, sums_, rcount_, rsum_;
    std::size_t rejected_ = 0;
};

struct Setup {
    ParameterLayout layout;
    ModelData md;
    AugmentedState init;
};

Setup prepare(const Dataset& ds, const ModelSpec& model, const PriorSpec& prior, const ChainConfig& cc) {
    ds.validate();
    model.validate();
    prior.validate();
    cc.validate();
    if (ds.size() > 0) {
        if (ds.n_exposed() == 0) {
            throw std::invalid_argument("no exposed individuals: the exposure effect distribution is unidentified");
        }
        ds.require_both_arms();
    }
    Setup st;
    st.layout = ParameterLayout::make(ds.confounder_names, model);
    st.md = ModelData::make(ds, model);
    st.init = cc.init ? AugmentedState::from_flat(st.layout, *cc.init, ds.size())
                      : initial_state(ds, st.md, model, prior);
    return st;
}

ChainDraws run_one(const Setup& st, const ModelSpec& model, const PriorSpec& prior, const ChainConfig& cc,
                   std::size_t n, std::size_t chain) {
    Chain sampler(st.md, model, prior, st.init, Rng(cc.seed).split(chain));
    ChainDraws out;
    const long retained = cc.retained();
    out.params.resize(retained, static_cast<Eigen::Index>(st.layout.size()));
    const long stored = cc.z1_every > 0 ? (retained + cc.z1_every - 1) / cc.z1_every : 0;
    out.z1.resize(stored, static_cast<Eigen::Index>(n));
    for (long it = 0; it < cc.n_burn; ++it) sampler.sweep();
    for (long it = 1; it <= cc.n_iter; ++it) {
        sampler.sweep();
        if (it % cc.thin != 0) continue;
        const long row = it / cc.thin - 1;
        long z1_row = -1;
        if (cc.z1_every > 0 && row % cc.z1_every == 0) {
            z1_row = row / cc.z1_every;
            out.z1_rows.push_back(row);
        }
        sampler.record(out, st.layout, row, z1_row);
    }
    out.rejected_residual_proposals = sampler.rejected();
    return out;
}

PosteriorDraws assemble(const Setup& st, const ModelSpec& model, const PriorSpec& prior, const ChainConfig& cc) {
    PosteriorDraws d;
    d.layout = st.layout;
    d.model = model;
    d.prior = prior;
    d.config = cc;
    d.chains.resize(static_cast<std::size_t>(cc.n_chains));
    return d;
}

}  // namespace

PosteriorDraws run_chains(const Dataset& ds, const ModelSpec& model, const PriorSpec& prior, const ChainConfig& cc) {
    const Setup st = prepare(ds, model, prior, cc);
    PosteriorDraws d = assemble(st, model, prior, cc);
    std::vector<std::exception_ptr> errors(d.chains.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int c = 0; c < cc.n_chains; ++c) {
        const auto uc = static_cast<std::size_t>(c);
        try {
            d.chains[uc] = run_one(st, model, prior, cc, ds.size(), uc);
        } catch (...) {
            errors[uc] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return d;
}

PosteriorDraws run_chains_serial(const Dataset& ds, const ModelSpec& model, const PriorSpec& prior,
                                 const ChainConfig& cc) {
    const Setup st = prepare(ds, model, prior, cc);
    PosteriorDraws d = assemble(st, model, prior, cc);
    for (std::size_t c = 0; c < d.chains.size(); ++c) d.chains[c] = run_one(st, model, prior, cc, ds.size(), c);
    return d;
}

}  // namespace icedist
