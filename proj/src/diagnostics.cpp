#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "icedist/analysis.hpp"
#include "icedist/stats.hpp"

namespace icedist {

namespace {

using Chains = std::vector<std::vector<double>>;

Chains split_chains(const Chains& chains) {
    Chains out;
    for (const auto& c : chains) {
        const std::size_t half = c.size() / 2;
        out.emplace_back(c.begin(), c.begin() + static_cast<long>(half));
        out.emplace_back(c.end() - static_cast<long>(half), c.end());
    }
    return out;
}

// Normal scores of pooled average ranks.
Chains rank_normalize(const Chains& chains) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        for (std::size_t i = 0; i < chains[c].size(); ++i) all.emplace_back(chains[c][i], c * chains[0].size() + i);
    }
    std::sort(all.begin(), all.end());
    const double s = static_cast<double>(all.size());
    std::vector<double> z(all.size());
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
        const double score = normal_quantile((rank - 0.375) / (s + 0.25));
        for (std::size_t k = i; k < j; ++k) z[all[k].second] = score;
        i = j;
    }
    Chains out(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
        out[c].assign(z.begin() + static_cast<long>(c * chains[0].size()),
                      z.begin() + static_cast<long>((c + 1) * chains[0].size()));
    }
    return out;
}

struct Variances {
    double within = 0.0;
    double var_plus = 0.0;
};

Variances pooled_variances(const Chains& chains) {
    const double n = static_cast<double>(chains[0].size());
    std::vector<double> means;
    double w = 0.0;
    for (const auto& c : chains) {
        means.push_back(mean_of(c));
        const double sd = sd_of(c);
        w += sd * sd;
    }
    w /= static_cast<double>(chains.size());
    const double b_over_n = sd_of(means) * sd_of(means);
    return {w, (n - 1.0) / n * w + b_over_n};
}

double rhat_of(const Chains& chains) {
    const Variances v = pooled_variances(chains);
    return std::sqrt(v.var_plus / v.within);
}

// Autocovariance at one lag (biased, divided by n).
double autocov(const std::vector<double>& x, double mean, std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < x.size(); ++i) acc += (x[i] - mean) * (x[i + lag] - mean);
    return acc / static_cast<double>(x.size());
}

// Multi-chain ESS with Geyer's initial monotone sequence; autocovariances
// are evaluated lazily, lag by lag.
double ess_of(const Chains& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains[0].size();
    const double total = static_cast<double>(m * n);
    const Variances v = pooled_variances(chains);
    if (!(v.var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> means;
    for (const auto& c : chains) means.push_back(mean_of(c));
    auto rho = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) acc += autocov(chains[c], means[c], lag);
        acc /= static_cast<double>(m);
        return 1.0 - (v.within - acc) / v.var_plus;
    };
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        double pair = rho(t) + rho(t + 1);
        if (t == 0) pair = 1.0 + rho(1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    tau = std::max(tau, 1.0 / std::log10(total));
    return std::min(total / tau, total);
}

Chains indicator(const Chains& chains, double cut) {
    Chains out = chains;
    for (auto& c : out) {
        for (double& x : c) x = x <= cut ? 1.0 : 0.0;
    }
    return out;
}

bool constant(const Chains& chains) {
    const double first = chains[0][0];
    for (const auto& c : chains) {
        for (double x : c) {
            if (x != first) return false;
        }
    }
    return true;
}

// Split R-hat and ESS cannot see copied draws (identical halves only lower
// the between-half variance), so copies are looked for directly.
bool has_identical_halves(const Chains& split) {
    for (std::size_t a = 0; a < split.size(); ++a) {
        for (std::size_t b = a + 1; b < split.size(); ++b) {
            if (split[a] == split[b]) return true;
        }
    }
    return false;
}

}  // namespace

Diagnostics diagnostics(const std::vector<std::vector<double>>& chains, const std::string& quantity) {
    if (chains.size() < 2) throw std::invalid_argument("diagnostics: need at least 2 chains");
    const std::size_t n = chains[0].size();
    for (const auto& c : chains) {
        if (c.size() != n) throw std::invalid_argument("diagnostics: chains differ in length");
    }
    if (n < 100) throw std::invalid_argument("diagnostics: need at least 100 draws per chain");

    Diagnostics d;
    d.quantity = quantity;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (constant(chains)) {
        d.rhat = d.ess_bulk = d.ess_tail = nan;
        d.degenerate = true;
        d.note = "all draws identical; R-hat and ESS undefined";
        return d;
    }
    const Chains split = split_chains(chains);
    const double bulk = rhat_of(rank_normalize(split));
    std::vector<double> pooled;
    for (const auto& c : split) pooled.insert(pooled.end(), c.begin(), c.end());
    const double med = percentile(pooled, 0.5);
    Chains folded = split;
    for (auto& c : folded) {
        for (double& x : c) x = std::abs(x - med);
    }
    const double tail = rhat_of(rank_normalize(folded));
    d.rhat = std::max(bulk, tail);
    d.ess_bulk = ess_of(rank_normalize(split));
    const double q05 = percentile(pooled, 0.05);
    const double q95 = percentile(pooled, 0.95);
    const double e05 = ess_of(indicator(split, q05));
    const double e95 = ess_of(indicator(split, q95));
    d.ess_tail = std::min(e05, e95);
    if (!std::isfinite(d.rhat)) {
        d.degenerate = true;
        d.note = "a split chain has zero variance";
    } else if (has_identical_halves(split)) {
        d.duplicated = true;
        d.note = "identical split halves: draws are duplicated and ESS is overstated";
    }
    return d;
}

Json diagnostics_to_json(const Diagnostics& d) {
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json j;
    j["quantity"] = d.quantity;
    j["rhat"] = num(d.rhat);
    j["ess_bulk"] = num(d.ess_bulk);
    j["ess_tail"] = num(d.ess_tail);
    j["degenerate"] = d.degenerate;
    j["duplicated"] = d.duplicated;
    if (!d.note.empty()) j["note"] = d.note;
    return j;
}

}  // namespace icedist
