#include <CLI11.hpp>

#include <omp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "icedist/analysis.hpp"
#include "icedist/csv.hpp"
#include "icedist/dataset.hpp"
#include "icedist/io.hpp"
#include "icedist/lmm.hpp"
#include "icedist/mcmc.hpp"
#include "icedist/scm.hpp"
#include "icedist/variance.hpp"
#include "svg.hpp"

#ifndef ICEDIST_VERSION
#define ICEDIST_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace icedist;

namespace {

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& text, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
}

void require_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw std::runtime_error("input file '" + path.string() + "' does not exist");
}

/// One manifest.json per output directory. Everything except `timestamp`
/// and `wall_time_seconds` is a function of the inputs.
class Run {
public:
    Run(std::string command, std::vector<std::string> args, fs::path out)
        : command_(std::move(command)), args_(std::move(args)), out_(std::move(out)),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(out_);
    }

    const fs::path& out() const { return out_; }

    void input(const fs::path& path) {
        inputs_.push_back(Json{{"path", path.string()}, {"fnv1a64", hex64(fnv1a64(read_bytes(path)))}});
    }
    void input_dir(const fs::path& dir) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) input(f);
    }
    void config(const Json& resolved) {
        config_ = resolved;
        hash_ = hex64(fnv1a64(resolved.dump()));
    }
    void seed(std::uint64_t s) { seed_ = s; }

    void json(const std::string& name, const Json& j) {
        write_json_file(j, out_ / name);
        outputs_.push_back(name);
    }
    void csv(const std::string& name, const CsvTable& t) {
        write_csv(t, out_ / name);
        outputs_.push_back(name);
    }
    void csv(const std::string& name, const TextTable& t) {
        write_csv(t, out_ / name);
        outputs_.push_back(name);
    }
    void text(const std::string& name, const std::string& s) {
        write_text(s, out_ / name);
        outputs_.push_back(name);
    }
    void output(const std::string& name) { outputs_.push_back(name); }
    void warn(const std::string& msg) {
        std::cerr << "warning: " << msg << "\n";
        warnings_.push_back(msg);
    }

    void finish() {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        Json m;
        m["command"] = command_;
        m["arguments"] = args_;
        m["version"] = ICEDIST_VERSION;
        m["config"] = config_;
        m["config_hash"] = hash_;
        if (seed_) m["seed"] = *seed_;
        else m["seed"] = nullptr;
        m["inputs"] = inputs_;
        std::sort(outputs_.begin(), outputs_.end());
        m["outputs"] = outputs_;
        m["warnings"] = warnings_;
        m["wall_time_seconds"] = wall;
        const std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        m["timestamp"] = stamp;
        write_json_file(m, out_ / "manifest.json");
    }

private:
    std::string command_;
    std::vector<std::string> args_;
    fs::path out_;
    std::chrono::steady_clock::time_point start_;
    Json config_ = Json::object();
    std::string hash_ = hex64(fnv1a64("{}"));
    std::optional<std::uint64_t> seed_;
    Json inputs_ = Json::array();
    std::vector<std::string> outputs_;
    std::vector<std::string> warnings_;
};

ScmConfig load_scm(const std::string& preset, const std::string& config) {
    if (!preset.empty() && !config.empty()) throw std::invalid_argument("give either --preset or --config, not both");
    if (!config.empty()) {
        require_file(config);
        const Json j = read_json_file(config);
        try {
            return scm_from_json(j);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(config + ": " + e.what());
        }
    }
    if (preset.empty()) throw std::invalid_argument("one of --preset or --config is required");
    return scm_preset(preset);
}

Dataset load_data(const fs::path& path) {
    require_file(path);
    return read_dataset_csv(path);
}

PosteriorDraws load_draws(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("draws directory '" + dir.string() + "' does not exist");
    require_file(dir / "fit.json");
    return read_draws(dir);
}

/// Flags that override the fit configuration; unset flags leave it alone.
struct FitFlags {
    std::string config, model, scale;
    std::optional<int> k_effect, k_residual, chains;
    std::optional<long> burn, iter, thin, z1_every;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> het;

    void add(CLI::App* c, bool with_seed = true) {
        c->add_option("--config", config, "fit configuration (JSON: model, prior, chains)");
        c->add_option("--model", model, "GaussianLMM | MixtureLMM | MixtureLMM_FlexResidual | MixtureLMM_ConfHet");
        c->add_option("--scale", scale, "chain defaults: desk | full")->check(CLI::IsMember({"desk", "full"}));
        c->add_option("--k-effect", k_effect, "effect mixture components")->check(CLI::PositiveNumber);
        c->add_option("--k-residual", k_residual, "residual mixture components")->check(CLI::PositiveNumber);
        c->add_option("--het", het, "het confounders (MixtureLMM_ConfHet)");
        c->add_option("--chains", chains, "number of chains")->check(CLI::PositiveNumber);
        c->add_option("--burn", burn, "burn-in sweeps")->check(CLI::NonNegativeNumber);
        c->add_option("--iter", iter, "retained-phase sweeps")->check(CLI::PositiveNumber);
        c->add_option("--thin", thin, "thinning")->check(CLI::PositiveNumber);
        if (with_seed) c->add_option("--seed", seed, "chain seed");
        c->add_option("--z1-every", z1_every, "store z1 every k-th retained draw (0 = never)")
            ->check(CLI::NonNegativeNumber);
    }

    FitConfig resolve(bool* z1_set = nullptr) const {
        FitConfig fc;
        bool z1_given = false;
        if (!config.empty()) {
            require_file(config);
            const Json j = read_json_file(config);
            try {
                fc = fit_config_from_json(j);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(config + ": " + e.what());
            }
            z1_given = j.contains("chains") && j["chains"].contains("z1_every");
        }
        if (scale == "full") {
            const auto seed_keep = fc.chains.seed;
            fc.chains = ChainConfig::full_scale();
            fc.chains.seed = seed_keep;
        }
        if (!model.empty()) {
            fc.model = ModelSpec::defaults_for(model_kind_from_string(model));
        }
        if (k_effect) fc.model.k_effect = *k_effect;
        if (k_residual) fc.model.k_residual = *k_residual;
        if (!het.empty()) fc.model.het_confounders = het;
        if (chains) fc.chains.n_chains = *chains;
        if (burn) fc.chains.n_burn = *burn;
        if (iter) fc.chains.n_iter = *iter;
        if (thin) fc.chains.thin = *thin;
        if (seed) fc.chains.seed = *seed;
        if (z1_every) {
            fc.chains.z1_every = *z1_every;
            z1_given = true;
        }
        if (z1_set) *z1_set = z1_given;
        fc.model.validate();
        fc.prior.validate();
        fc.chains.validate();
        return fc;
    }
};

// ---- commands ----------------------------------------------------------------

void cmd_simulate(const std::vector<std::string>& args, const std::string& preset, const std::string& config,
                  std::size_t n, std::uint64_t seed, const fs::path& out) {
    const ScmConfig cfg = load_scm(preset, config);
    Run run("simulate", args, out);
    if (!config.empty()) run.input(config);
    run.config(Json{{"scm", scm_to_json(cfg)}, {"n", n}});
    run.seed(seed);
    const Simulation sim = simulate(cfg, n, Rng(seed));
    write_dataset_csv(sim.data, out / "data.csv");
    run.output("data.csv");
    write_truth_csv(sim.truth, out / "truth.csv");
    run.output("truth.csv");
    run.json("scm.json", scm_to_json(cfg));
    run.finish();
}

void cmd_fit(const std::vector<std::string>& args, const fs::path& data, const FitFlags& flags,
             const std::vector<std::string>& confounders, const fs::path& out) {
    Dataset ds = load_data(data);
    if (!confounders.empty()) ds = ds.with_confounders(confounders);
    bool z1_set = false;
    FitConfig fc = flags.resolve(&z1_set);
    // Without an explicit setting, about 500 z1 rows per chain are stored.
    if (!z1_set) fc.chains.z1_every = std::max<long>(1, (fc.chains.retained() + 499) / 500);
    Run run("fit", args, out);
    run.input(data);
    if (!flags.config.empty()) run.input(flags.config);
    Json resolved = fit_config_to_json(fc);
    resolved["confounders"] = ds.confounder_names;
    run.config(resolved);
    run.seed(fc.chains.seed);
    const PosteriorDraws d = run_chains(ds, fc.model, fc.prior, fc.chains);
    write_draws(d, ds.confounder_names, out);
    run.output("fit.json");
    for (std::size_t c = 0; c < d.n_chains(); ++c) run.output("chain_" + std::to_string(c + 1) + ".csv");
    run.output("z1.csv");
    for (std::size_t c = 0; c < d.n_chains(); ++c) {
        if (d.chains[c].rejected_residual_proposals > 0) {
            run.warn("chain " + std::to_string(c + 1) + ": " + std::to_string(d.chains[c].rejected_residual_proposals) +
                     " residual-weight proposals rejected (last weight below 1e-6)");
        }
    }
    run.finish();
}

void cmd_diagnose(const std::vector<std::string>& args, const fs::path& draws_dir,
                  std::vector<std::string> quantities, const fs::path& out) {
    const PosteriorDraws d = load_draws(draws_dir);
    Run run("diagnose", args, out);
    run.input_dir(draws_dir);
    if (quantities.empty()) quantities = default_diagnostic_quantities(d);
    run.config(Json{{"quantities", quantities}});
    Json all = Json::array();
    TextTable t;
    t.header = {"quantity", "rhat", "ess_bulk", "ess_tail", "degenerate", "note"};
    for (const auto& q : quantities) {
        const Diagnostics dg = diagnostics(d, q);
        all.push_back(diagnostics_to_json(dg));
        t.rows.push_back({q, format_double(dg.rhat), format_double(dg.ess_bulk), format_double(dg.ess_tail),
                          dg.degenerate ? "true" : "false", dg.note});
        if (std::isfinite(dg.rhat) && dg.rhat > 1.05) {
            run.warn(q + ": R-hat " + format_double(dg.rhat) + " exceeds 1.05");
        }
    }
    run.json("diagnostics.json", Json{{"quantities", all}});
    run.csv("diagnostics.csv", t);
    run.finish();
}

void cmd_ice(const std::vector<std::string>& args, const fs::path& draws_dir, const IceOptions& opt,
             const fs::path& out) {
    const PosteriorDraws d = load_draws(draws_dir);
    Run run("ice", args, out);
    run.input_dir(draws_dir);
    run.config(Json{{"harm_direction", opt.harm == HarmDirection::Positive ? "positive" : "negative"},
                    {"grid_points", opt.grid_points},
                    {"level", opt.level},
                    {"max_band_curves", opt.max_band_curves}});
    const IceSummary s = ice_distribution(d, opt);
    run.json("ice_summary.json", ice_summary_to_json(s));
    run.csv("ice_density.csv", ice_density_table(s));
    run.finish();
}

void cmd_ppc(const std::vector<std::string>& args, const fs::path& draws_dir, const fs::path& data,
             const PpcOptions& opt, const fs::path& out) {
    const PosteriorDraws d = load_draws(draws_dir);
    const Dataset ds = load_data(data);
    Run run("ppc", args, out);
    run.input_dir(draws_dir);
    run.input(data);
    run.config(Json{{"replicates", opt.replicates},
                    {"confounders", opt.confounders},
                    {"grid_points", opt.grid_points},
                    {"min_stratum", opt.min_stratum}});
    run.seed(opt.seed);
    const PpcResult r = posterior_predictive_check(d, ds, opt);
    for (const auto& w : r.warnings) run.warn(w);
    run.json("ppc.json", ppc_to_json(r));
    run.csv("ppc.csv", ppc_table(r));
    run.finish();
}

void cmd_variance(const std::vector<std::string>& args, const fs::path& data, const std::vector<std::string>& strata,
                  std::size_t max_levels, const fs::path& out) {
    const Dataset ds = load_data(data);
    Run run("variance", args, out);
    run.input(data);
    run.config(Json{{"strata", strata}, {"max_levels", max_levels}});
    std::optional<Stratification> st;
    if (!strata.empty()) st = stratify(ds, strata, max_levels);
    const VarianceReport rep = variance_report(ds, st);
    run.json("variance.json", variance_report_to_json(rep));
    TextTable t;
    t.header = {"stratum", "n1", "n0", "mean1", "mean0", "var1", "var0", "variance_ratio", "p_value",
                "p_value_one_sided", "flag", "lower_bound", "additive", "multiplicative"};
    auto add = [&t](const VarianceRow& r) {
        t.rows.push_back({r.moments.stratum, std::to_string(r.moments.n1), std::to_string(r.moments.n0),
                          format_double(r.moments.mean1), format_double(r.moments.mean0),
                          format_double(r.moments.var1), format_double(r.moments.var0),
                          format_double(r.test.variance_ratio), format_double(r.test.p_value),
                          format_double(r.test.p_value_one_sided), r.test.flag ? "true" : "false",
                          format_double(r.lower_bound), format_double(r.additive),
                          r.multiplicative ? format_double(*r.multiplicative) : std::string("NA")});
    };
    add(rep.overall);
    for (const auto& r : rep.strata) add(r);
    run.csv("variance.csv", t);
    for (const auto& r : rep.strata) {
        if (r.additive_negative) run.warn("stratum " + r.moments.stratum + ": negative additive variance estimate");
    }
    run.finish();
}

void cmd_select(const std::vector<std::string>& args, const fs::path& data, std::vector<std::string> candidates,
                double mean_threshold, double var_threshold, const fs::path& out) {
    const Dataset ds = load_data(data);
    if (candidates.empty()) candidates = ds.confounder_names;
    Run run("select-confounders", args, out);
    run.input(data);
    run.config(Json{{"candidates", candidates}, {"mean_threshold", mean_threshold}, {"var_threshold", var_threshold}});
    const SelectionResult res = select_confounders(ds, candidates, mean_threshold, var_threshold);
    run.json("selection.json", selection_to_json(res));
    TextTable t;
    t.header = {"phase", "round", "candidate", "old_value", "new_value", "relative_change", "decision"};
    for (const auto& s : res.trace) {
        t.rows.push_back({s.phase, std::to_string(s.round), s.candidate, format_double(s.old_value),
                          format_double(s.new_value), format_double(s.relative_change), s.decision});
    }
    run.csv("selection_trace.csv", t);
    run.finish();
}

void cmd_coverage(const std::vector<std::string>& args, const std::string& preset, const std::string& config,
                  std::size_t replicates, std::size_t n, std::uint64_t seed, const FitFlags& flags,
                  const fs::path& out) {
    const ScmConfig cfg = load_scm(preset, config);
    CoverageOptions opt;
    opt.replicates = replicates;
    opt.n = n;
    opt.seed = seed;
    const FitConfig fc = flags.resolve();
    opt.model = fc.model;
    opt.prior = fc.prior;
    opt.chains = fc.chains;
    opt.chains.z1_every = 0;
    Run run("coverage", args, out);
    if (!config.empty()) run.input(config);
    if (!flags.config.empty()) run.input(flags.config);
    Json resolved = fit_config_to_json(FitConfig{opt.model, opt.prior, opt.chains});
    resolved["scm"] = scm_to_json(cfg);
    resolved["replicates"] = replicates;
    resolved["n"] = n;
    run.config(resolved);
    run.seed(seed);
    const CoverageTable t = coverage_study(cfg, opt);
    run.csv("coverage.csv", coverage_csv(t));
    run.json("coverage.json", coverage_to_json(t));
    if (t.failures > 0) run.warn(std::to_string(t.failures) + " replicate fits failed");
    run.finish();
}

void cmd_plot(const std::vector<std::string>& args, const std::string& kind, const fs::path& input,
              double var0_max, double diff_max, std::size_t steps, const fs::path& out) {
    Run run("plot", args, out);
    if (kind == "ice") {
        const fs::path file = input / "ice_density.csv";
        require_file(file);
        run.input(file);
        const CsvTable t = read_csv(file);
        svg::Panel p;
        p.title = "ICE density";
        p.x_label = "individual causal effect";
        p.y_label = "density";
        p.shades.push_back({t.column_values("y"), t.column_values("lo"), t.column_values("hi")});
        p.lines.push_back({t.column_values("y"), t.column_values("density")});
        p.vlines.push_back(0.0);
        run.text("ice_density.svg", svg::render_panels({p}));
    } else if (kind == "ppc") {
        const fs::path file = input / "ppc.csv";
        require_file(file);
        run.input(file);
        const TextTable t = read_text_csv(file);
        std::vector<svg::Panel> panels;
        for (const auto& row : t.rows) {
            double v[5];
            for (std::size_t k = 0; k < 5; ++k) v[k] = std::stod(row[k + 1]);
            if (panels.empty() || panels.back().title != row[0]) {
                svg::Panel p;
                p.title = row[0];
                p.x_label = "outcome";
                p.y_label = "density";
                p.shades.emplace_back();
                p.lines.resize(2);
                p.lines[0].color = "#000000";
                p.lines[1].color = "#1f4e79";
                p.lines[1].dashed = true;
                panels.push_back(std::move(p));
            }
            auto& p = panels.back();
            p.shades[0].x.push_back(v[0]);
            p.shades[0].lo.push_back(v[3]);
            p.shades[0].hi.push_back(v[4]);
            p.lines[0].x.push_back(v[0]);
            p.lines[0].y.push_back(v[1]);
            p.lines[1].x.push_back(v[0]);
            p.lines[1].y.push_back(v[2]);
        }
        run.text("ppc.svg", svg::render_panels(panels, 2));
    } else {
        run.config(Json{{"var0_max", var0_max}, {"diff_max", diff_max}, {"steps", steps}});
        const CsvTable t = lower_bound_grid(var0_max, diff_max, steps);
        std::vector<double> xs, ys;
        std::vector<std::vector<double>> z(steps, std::vector<double>(steps));
        for (std::size_t i = 0; i < steps; ++i) {
            xs.push_back(var0_max * static_cast<double>(i) / static_cast<double>(steps - 1));
            ys.push_back(diff_max * static_cast<double>(i) / static_cast<double>(steps - 1));
        }
        const std::size_t c0 = t.column("var0"), cd = t.column("diff"), cl = t.column("lower_bound");
        for (const auto& row : t.rows) {
            const auto i = static_cast<std::size_t>(std::lround(row[cd] / diff_max * static_cast<double>(steps - 1)));
            const auto j = static_cast<std::size_t>(std::lround(row[c0] / var0_max * static_cast<double>(steps - 1)));
            z[i][j] = row[cl];
        }
        run.csv("bound_grid.csv", t);
        run.text("bound_surface.svg", svg::render_heatmap(xs, ys, z, "Lower bound on var(ICE)",
                                                          "var(Y | A=0)", "var(Y | A=1) - var(Y | A=0)"));
    }
    if (kind != "bound") run.config(Json{{"kind", kind}});
    run.finish();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Individual causal effect distributions for binary exposures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ICEDIST_VERSION);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: all available)")->check(CLI::NonNegativeNumber);
    const std::vector<std::string> args(argv + 1, argv + argc);

    std::string preset, config, data, draws, out, kind = "ice", harm = "positive";
    std::size_t n = 0, replicates = 20, ppc_replicates = 500, cov_n = 1000, grid = 512, max_levels = 10, steps = 101, max_band = 1000, min_stratum = 10;
    std::uint64_t seed = 1;
    double level = 0.95, mean_threshold = 0.05, var_threshold = 0.10, var0_max = 100.0, diff_max = 100.0;
    std::vector<std::string> names, candidates;
    FitFlags fit_flags, cov_flags;

    auto* sim = app.add_subcommand("simulate", "simulate a dataset and its hidden potential outcomes");
    sim->add_option("--preset", preset, "fig3-gaussian | fig3-lognormal | fig3-mixture")
        ->check(CLI::IsMember(scm_preset_names()));
    sim->add_option("--config", config, "structural model configuration (JSON)");
    sim->add_option("--n", n, "number of individuals")->required()->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--out", out, "output directory")->required();

    auto* fit = app.add_subcommand("fit", "run the MCMC sampler");
    fit->add_option("--data", data, "dataset CSV (y,a,confounders...)")->required();
    fit->add_option("--confounders", names, "confounders to adjust for (default: all columns)");
    fit_flags.add(fit);
    fit->add_option("--out", out, "draws directory")->required();

    auto* diag = app.add_subcommand("diagnose", "R-hat and bulk/tail ESS");
    diag->add_option("--draws", draws, "draws directory")->required();
    diag->add_option("--quantities", names, "columns or ate, p_positive, q05..q95");
    diag->add_option("--out", out, "output directory")->required();

    auto* ice = app.add_subcommand("ice", "ICE density, ATE, TBR and quantiles");
    ice->add_option("--draws", draws, "draws directory")->required();
    ice->add_option("--harm", harm, "side of zero that counts as harm")->check(CLI::IsMember({"positive", "negative"}));
    ice->add_option("--grid", grid, "density grid points")->check(CLI::Range(2, 1 << 20));
    ice->add_option("--level", level, "credible level")->check(CLI::Range(0.5, 0.9999));
    ice->add_option("--max-band-curves", max_band, "per-iteration curves used for the band")
        ->check(CLI::PositiveNumber);
    ice->add_option("--out", out, "output directory")->required();

    auto* ppc = app.add_subcommand("ppc", "posterior predictive check per stratum");
    ppc->add_option("--draws", draws, "draws directory")->required();
    ppc->add_option("--data", data, "dataset CSV the draws were fitted to")->required();
    ppc->add_option("--replicates", ppc_replicates, "replicate datasets (0 = every retained draw)")
        ->check(CLI::NonNegativeNumber);
    ppc->add_option("--confounders", names, "confounders to cross with the exposure arms");
    ppc->add_option("--seed", seed, "random seed");
    ppc->add_option("--grid", grid, "grid points")->check(CLI::Range(2, 1 << 20));
    ppc->add_option("--min-stratum", min_stratum, "smallest stratum evaluated");
    ppc->add_option("--out", out, "output directory")->required();

    auto* var = app.add_subcommand("variance", "arm variances, F test and ICE variance estimates");
    var->add_option("--data", data, "dataset CSV")->required();
    var->add_option("--strata", names, "confounders defining strata");
    var->add_option("--max-levels", max_levels, "columns with at most this many values are used level by level");
    var->add_option("--out", out, "output directory")->required();

    auto* sel = app.add_subcommand("select-confounders", "two-phase confounder selection");
    sel->add_option("--data", data, "dataset CSV")->required();
    sel->add_option("--candidates", candidates, "candidate confounders (default: all columns)");
    sel->add_option("--mean-threshold", mean_threshold, "phase-one relative change threshold");
    sel->add_option("--var-threshold", var_threshold, "phase-two relative change threshold");
    sel->add_option("--out", out, "output directory")->required();

    auto* cov = app.add_subcommand("coverage", "credible-set coverage simulation study");
    cov->add_option("--preset", preset, "fig3-gaussian | fig3-lognormal | fig3-mixture")
        ->check(CLI::IsMember(scm_preset_names()));
    cov->add_option("--scm", config, "structural model configuration (JSON)");
    cov->add_option("--replicates", replicates, "simulated datasets")->check(CLI::Range(2, 1000000));
    cov->add_option("--n", cov_n, "individuals per dataset")->check(CLI::PositiveNumber);
    cov->add_option("--seed", seed, "seed for the replicate datasets and chains");
    cov_flags.add(cov, false);
    cov->add_option("--out", out, "output directory")->required();

    auto* plot = app.add_subcommand("plot", "SVG figures");
    plot->add_option("--kind", kind, "ice | ppc | bound")->check(CLI::IsMember({"ice", "ppc", "bound"}));
    plot->add_option("--input", draws, "directory written by the ice or ppc command");
    plot->add_option("--var0-max", var0_max, "bound surface: largest var(Y|A=0)")->check(CLI::PositiveNumber);
    plot->add_option("--diff-max", diff_max, "bound surface: largest variance difference")
        ->check(CLI::PositiveNumber);
    plot->add_option("--steps", steps, "bound surface: points per axis")->check(CLI::Range(2, 2000));
    plot->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (threads > 0) omp_set_num_threads(threads);

    try {
        if (*sim) {
            cmd_simulate(args, preset, config, n, seed, out);
        } else if (*fit) {
            cmd_fit(args, data, fit_flags, names, out);
        } else if (*diag) {
            cmd_diagnose(args, draws, names, out);
        } else if (*ice) {
            IceOptions opt;
            opt.harm = harm_direction_from_string(harm);
            opt.grid_points = grid;
            opt.level = level;
            opt.max_band_curves = max_band;
            cmd_ice(args, draws, opt, out);
        } else if (*ppc) {
            PpcOptions opt;
            opt.replicates = ppc_replicates;
            opt.confounders = names;
            opt.seed = seed;
            opt.grid_points = grid;
            opt.min_stratum = min_stratum;
            cmd_ppc(args, draws, data, opt, out);
        } else if (*var) {
            cmd_variance(args, data, names, max_levels, out);
        } else if (*sel) {
            cmd_select(args, data, candidates, mean_threshold, var_threshold, out);
        } else if (*cov) {
            cmd_coverage(args, preset, config, replicates, cov_n, seed, cov_flags, out);
        } else if (*plot) {
            if (kind != "bound" && draws.empty()) throw std::invalid_argument("plot --kind " + kind + " needs --input");
            cmd_plot(args, kind, draws, var0_max, diff_max, steps, out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
