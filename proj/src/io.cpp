#include "icedist/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "icedist/csv.hpp"

namespace icedist {

namespace jf = json_fields;

Json model_spec_to_json(const ModelSpec& m) {
    return Json{{"kind", std::string(to_string(m.kind))},
                {"K_effect", m.k_effect},
                {"K_residual", m.k_residual},
                {"het_confounders", m.het_confounders}};
}

ModelSpec model_spec_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) jf::fail(path, "expected an object");
    ModelSpec m;
    if (j.contains("kind")) {
        try {
            m = ModelSpec::defaults_for(model_kind_from_string(jf::string(j, "kind", path)));
        } catch (const std::invalid_argument& e) {
            const std::string what = e.what();
            if (what.rfind(path, 0) == 0) throw;
            jf::fail(path + ".kind", what);
        }
    }
    m.k_effect = static_cast<int>(jf::integer_or(j, "K_effect", path, m.k_effect));
    m.k_residual = static_cast<int>(jf::integer_or(j, "K_residual", path, m.k_residual));
    if (j.contains("het_confounders")) m.het_confounders = jf::strings(j, "het_confounders", path);
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        jf::fail(path, e.what());
    }
    return m;
}

Json prior_spec_to_json(const PriorSpec& p) {
    return Json{{"location_prior_var", p.location_prior_var},
                {"scale_prior_upper", p.scale_prior_upper},
                {"dirichlet_alpha", p.dirichlet_alpha}};
}

PriorSpec prior_spec_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) jf::fail(path, "expected an object");
    PriorSpec p;
    if (j.contains("location_prior_var")) p.location_prior_var = jf::positive(j, "location_prior_var", path);
    if (j.contains("scale_prior_upper")) p.scale_prior_upper = jf::positive(j, "scale_prior_upper", path);
    if (j.contains("dirichlet_alpha")) p.dirichlet_alpha = jf::positive(j, "dirichlet_alpha", path);
    return p;
}

Json chain_config_to_json(const ChainConfig& c) {
    Json j{{"n_chains", c.n_chains}, {"n_burn", c.n_burn}, {"n_iter", c.n_iter},
           {"thin", c.thin},         {"seed", c.seed},     {"z1_every", c.z1_every}};
    if (c.init) j["init"] = *c.init;
    return j;
}

ChainConfig chain_config_from_json(const Json& j, const std::string& path, const ChainConfig& base) {
    if (!j.is_object()) jf::fail(path, "expected an object");
    ChainConfig c = base;
    if (j.contains("scale")) {
        const std::string s = jf::string(j, "scale", path);
        if (s == "full") {
            c = ChainConfig::full_scale();
        } else if (s != "desk") {
            jf::fail(path + ".scale", "expected 'desk' or 'full'");
        }
        c.seed = base.seed;
        c.z1_every = base.z1_every;
    }
    c.n_chains = static_cast<int>(jf::integer_or(j, "n_chains", path, c.n_chains));
    c.n_burn = jf::integer_or(j, "n_burn", path, c.n_burn);
    c.n_iter = jf::integer_or(j, "n_iter", path, c.n_iter);
    c.thin = jf::integer_or(j, "thin", path, c.thin);
    if (j.contains("seed")) {
        const Json& s = j.at("seed");
        if (!s.is_number_unsigned()) jf::fail(path + ".seed", "expected a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }
    c.z1_every = jf::integer_or(j, "z1_every", path, c.z1_every);
    if (j.contains("init")) c.init = jf::numbers(j, "init", path);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        jf::fail(path, e.what());
    }
    return c;
}

Json fit_config_to_json(const FitConfig& c) {
    return Json{{"model", model_spec_to_json(c.model)},
                {"prior", prior_spec_to_json(c.prior)},
                {"chains", chain_config_to_json(c.chains)}};
}

FitConfig fit_config_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) jf::fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "model" && key != "prior" && key != "chains") {
            jf::fail(path + "." + key, "unknown field (expected model, prior or chains)");
        }
    }
    FitConfig c;
    if (j.contains("model")) c.model = model_spec_from_json(j.at("model"), path + ".model");
    if (j.contains("prior")) c.prior = prior_spec_from_json(j.at("prior"), path + ".prior");
    if (j.contains("chains")) c.chains = chain_config_from_json(j.at("chains"), path + ".chains");
    return c;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        const auto cut = what.find("syntax error");
        if (cut != std::string::npos) what = what.substr(cut);
        throw std::invalid_argument(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                                    what);
    }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_draws(const PosteriorDraws& draws, const std::vector<std::string>& confounders,
                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    Json meta;
    meta["model"] = model_spec_to_json(draws.model);
    meta["prior"] = prior_spec_to_json(draws.prior);
    meta["chains"] = chain_config_to_json(draws.config);
    meta["confounders"] = confounders;
    meta["columns"] = draws.layout.names();
    meta["n_individuals"] = draws.n_individuals();
    Json rejected = Json::array();
    for (const auto& c : draws.chains) rejected.push_back(c.rejected_residual_proposals);
    meta["rejected_residual_proposals"] = std::move(rejected);
    write_json_file(meta, dir / "fit.json");

    const auto names = draws.layout.names();
    for (std::size_t c = 0; c < draws.n_chains(); ++c) {
        CsvTable t;
        t.header = names;
        const auto& p = draws.chains[c].params;
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(p.cols()));
            for (Eigen::Index k = 0; k < p.cols(); ++k) row[static_cast<std::size_t>(k)] = p(r, k);
            t.rows.push_back(std::move(row));
        }
        write_csv(t, dir / ("chain_" + std::to_string(c + 1) + ".csv"));
    }

    CsvTable z;
    z.header = {"chain", "row"};
    const std::size_t n = draws.n_individuals();
    for (std::size_t i = 0; i < n; ++i) z.header.push_back("z1_" + std::to_string(i + 1));
    for (std::size_t c = 0; c < draws.n_chains(); ++c) {
        const auto& ch = draws.chains[c];
        for (Eigen::Index r = 0; r < ch.z1.rows(); ++r) {
            std::vector<double> row{static_cast<double>(c + 1), static_cast<double>(ch.z1_rows[static_cast<std::size_t>(r)])};
            for (Eigen::Index i = 0; i < ch.z1.cols(); ++i) row.push_back(ch.z1(r, i));
            z.rows.push_back(std::move(row));
        }
    }
    write_csv(z, dir / "z1.csv");
}

PosteriorDraws read_draws(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error("draws directory '" + dir.string() + "' does not exist");
    }
    const Json meta = read_json_file(dir / "fit.json");
    const std::string where = (dir / "fit.json").string();
    PosteriorDraws d;
    d.model = model_spec_from_json(jf::child(meta, "model", where), where + ".model");
    d.prior = prior_spec_from_json(jf::child(meta, "prior", where), where + ".prior");
    d.config = chain_config_from_json(jf::child(meta, "chains", where), where + ".chains");
    const auto confounders = jf::strings(meta, "confounders", where);
    d.layout = ParameterLayout::make(confounders, d.model);
    if (jf::strings(meta, "columns", where) != d.layout.names()) {
        throw std::runtime_error(where + ": columns do not match the model layout");
    }
    const auto n = static_cast<std::size_t>(jf::integer(meta, "n_individuals", where));
    const Json& rejected = jf::child(meta, "rejected_residual_proposals", where);

    d.chains.resize(static_cast<std::size_t>(d.config.n_chains));
    for (std::size_t c = 0; c < d.chains.size(); ++c) {
        const auto path = dir / ("chain_" + std::to_string(c + 1) + ".csv");
        const CsvTable t = read_csv(path);
        if (t.header != d.layout.names()) throw std::runtime_error(path.string() + ": unexpected header");
        auto& p = d.chains[c].params;
        p.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            for (std::size_t k = 0; k < t.header.size(); ++k) {
                p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = t.rows[r][k];
            }
        }
        if (c < rejected.size()) d.chains[c].rejected_residual_proposals = rejected[c].get<std::size_t>();
    }

    const auto zpath = dir / "z1.csv";
    const CsvTable z = read_csv(zpath);
    if (z.header.size() != n + 2) throw std::runtime_error(zpath.string() + ": expected " + std::to_string(n) + " individuals");
    std::vector<std::vector<const std::vector<double>*>> per_chain(d.chains.size());
    for (const auto& row : z.rows) {
        const auto c = static_cast<std::size_t>(row[0]);
        if (c < 1 || c > d.chains.size()) throw std::runtime_error(zpath.string() + ": chain index out of range");
        per_chain[c - 1].push_back(&row);
    }
    for (std::size_t c = 0; c < d.chains.size(); ++c) {
        auto& ch = d.chains[c];
        ch.z1.resize(static_cast<Eigen::Index>(per_chain[c].size()), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < per_chain[c].size(); ++r) {
            const auto& row = *per_chain[c][r];
            ch.z1_rows.push_back(static_cast<long>(row[1]));
            for (std::size_t i = 0; i < n; ++i) ch.z1(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = row[i + 2];
        }
    }
    d.validate();
    return d;
}

}  // namespace icedist
