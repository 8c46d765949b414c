#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "icedist/io.hpp"
#include "icedist/mcmc.hpp"

using namespace icedist;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("icedist_test_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("draws directory round trip is exact") {
    const Dataset ds = fixtures::lmm_data(300, 2.0, 4.0, 1.0, 8);
    ModelSpec model = ModelSpec::defaults_for(ModelKind::MixtureLmmConfHet);
    model.k_effect = 2;
    model.k_residual = 2;
    model.het_confounders = {"l_1"};
    ChainConfig cc;
    cc.n_chains = 2;
    cc.n_burn = 50;
    cc.n_iter = 200;
    cc.thin = 4;
    cc.z1_every = 5;
    cc.seed = 3;
    const PosteriorDraws d = run_chains(ds, model, PriorSpec{}, cc);

    const auto dir = scratch("roundtrip");
    write_draws(d, ds.confounder_names, dir);
    const PosteriorDraws r = read_draws(dir);

    CHECK(r.layout.names() == d.layout.names());
    CHECK(r.model.kind == d.model.kind);
    CHECK(r.model.het_confounders == d.model.het_confounders);
    CHECK(r.config.retained() == d.config.retained());
    REQUIRE(r.n_chains() == d.n_chains());
    for (std::size_t c = 0; c < d.n_chains(); ++c) {
        CHECK(r.chains[c].params == d.chains[c].params);
        CHECK(r.chains[c].z1 == d.chains[c].z1);
        CHECK(r.chains[c].z1_rows == d.chains[c].z1_rows);
        CHECK(r.chains[c].rejected_residual_proposals == d.chains[c].rejected_residual_proposals);
    }
}

TEST_CASE("fit config errors name the field path") {
    CHECK_THROWS_WITH_AS(fit_config_from_json(Json::parse(R"({"chains": {"thin": "x"}})")),
                         doctest::Contains("config.chains.thin"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(fit_config_from_json(Json::parse(R"({"modle": {}})")),
                         doctest::Contains("modle"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(fit_config_from_json(Json::parse(R"({"model": {"kind": "Other"}})")),
                         doctest::Contains("config.model.kind"), std::invalid_argument);

    FitConfig c;
    c.model = ModelSpec::defaults_for(ModelKind::MixtureLmmFlexResidual);
    c.chains.seed = 99;
    const FitConfig back = fit_config_from_json(fit_config_to_json(c));
    CHECK(fit_config_to_json(back) == fit_config_to_json(c));
}

TEST_CASE("json file errors report location") {
    const auto dir = scratch("json");
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << "{\n  \"a\": 1,\n  \"b\": ]\n}\n";
    CHECK_THROWS_WITH_AS(read_json_file(bad), doctest::Contains("bad.json:3:8: syntax error"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(read_json_file(dir / "missing.json"), doctest::Contains("missing.json"),
                         std::runtime_error);
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}
