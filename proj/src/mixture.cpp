#include "icedist/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icedist/stats.hpp"

namespace icedist {

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<double> means,
                                 std::vector<double> sds)
    : weights_(std::move(weights)), means_(std::move(means)), sds_(std::move(sds)) {
    if (weights_.empty()) throw std::invalid_argument("GaussianMixture: K must be >= 1");
    if (means_.size() != weights_.size() || sds_.size() != weights_.size()) {
        throw std::invalid_argument("GaussianMixture: weights, means and sds differ in length");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) throw std::invalid_argument("GaussianMixture: negative or NaN weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("GaussianMixture: weights sum to " + std::to_string(total) + ", not 1");
    }
    for (double s : sds_) {
        if (!(s > 0.0)) throw std::invalid_argument("GaussianMixture: sds must be strictly positive");
    }
    for (double m : means_) {
        if (!std::isfinite(m)) throw std::invalid_argument("GaussianMixture: non-finite mean");
    }
}

double GaussianMixture::pdf(double y) const {
    double out = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
        out += weights_[k] * normal_pdf((y - means_[k]) / sds_[k]) / sds_[k];
    }
    return out;
}

double GaussianMixture::cdf(double y) const {
    double out = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
        out += weights_[k] * normal_cdf((y - means_[k]) / sds_[k]);
    }
    return std::min(out, 1.0);
}

double GaussianMixture::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("mixture quantile: q must lie in (0,1)");
    for (double s : sds_) {
        if (s < 1e-10) throw RootFindingError("mixture quantile: component sd below 1e-10 (atom)");
    }
    const double max_sd = *std::max_element(sds_.begin(), sds_.end());
    double lo = *std::min_element(means_.begin(), means_.end()) - 10.0 * max_sd;
    double hi = *std::max_element(means_.begin(), means_.end()) + 10.0 * max_sd;
    const double span = hi - lo;
    for (int expand = 0; cdf(lo) > q; ++expand) {
        if (expand == 64) throw RootFindingError("mixture quantile: lower bracket expansion failed");
        lo -= span * std::ldexp(1.0, expand);
    }
    for (int expand = 0; cdf(hi) < q; ++expand) {
        if (expand == 64) throw RootFindingError("mixture quantile: upper bracket expansion failed");
        hi += span * std::ldexp(1.0, expand);
    }
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // floating-point resolution reached
        if (cdf(mid) < q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double GaussianMixture::sample(Rng& rng) const {
    const std::size_t k = size() == 1 ? 0 : rng.categorical(weights_);
    return rng.normal(means_[k], sds_[k]);
}

double GaussianMixture::mean() const {
    return std::inner_product(weights_.begin(), weights_.end(), means_.begin(), 0.0);
}

double GaussianMixture::variance() const {
    const double m = mean();
    double out = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
        const double d = means_[k] - m;
        out += weights_[k] * (sds_[k] * sds_[k] + d * d);
    }
    return out;
}

Json mixture_to_json(const GaussianMixture& gm) {
    Json j;
    j["K"] = gm.size();
    for (std::size_t k = 0; k < gm.size(); ++k) j["w_" + std::to_string(k + 1)] = gm.weights()[k];
    for (std::size_t k = 0; k < gm.size(); ++k) j["mu_" + std::to_string(k + 1)] = gm.means()[k];
    for (std::size_t k = 0; k < gm.size(); ++k) j["tau_" + std::to_string(k + 1)] = gm.sds()[k];
    return Json(j);
}

GaussianMixture mixture_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("K")) throw std::invalid_argument("mixture record: missing field K");
    const auto k = j.at("K").get<std::size_t>();
    std::vector<double> w(k), mu(k), tau(k);
    auto field = [&](const std::string& name) {
        if (!j.contains(name)) throw std::invalid_argument("mixture record: missing field " + name);
        return j.at(name).get<double>();
    };
    for (std::size_t i = 0; i < k; ++i) {
        const auto idx = std::to_string(i + 1);
        w[i] = field("w_" + idx);
        mu[i] = field("mu_" + idx);
        tau[i] = field("tau_" + idx);
    }
    return GaussianMixture(std::move(w), std::move(mu), std::move(tau));
}

}  // namespace icedist
