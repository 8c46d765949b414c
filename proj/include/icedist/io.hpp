#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "icedist/draws.hpp"
#include "icedist/json.hpp"
#include "icedist/model.hpp"

namespace icedist {

Json model_spec_to_json(const ModelSpec& m);
ModelSpec model_spec_from_json(const Json& j, const std::string& path);
Json prior_spec_to_json(const PriorSpec& p);
PriorSpec prior_spec_from_json(const Json& j, const std::string& path);
Json chain_config_to_json(const ChainConfig& c);
/// Missing fields keep the values of `base`.
ChainConfig chain_config_from_json(const Json& j, const std::string& path, const ChainConfig& base = {});

/// Settings of one fit: {"model": ..., "prior": ..., "chains": ...}, every
/// section optional.
struct FitConfig {
    ModelSpec model;
    PriorSpec prior;
    ChainConfig chains;
};

Json fit_config_to_json(const FitConfig& c);
FitConfig fit_config_from_json(const Json& j, const std::string& path = "config");

/// Parses a JSON file; errors name the file and, for syntax errors, the
/// line and column.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& j, const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Draws directory layout: fit.json (model, prior, chains, confounders),
/// chain_<k>.csv (one row per retained iteration) and z1.csv (one row per
/// stored iteration: chain, row, then one column per individual).
void write_draws(const PosteriorDraws& draws, const std::vector<std::string>& confounders,
                 const std::filesystem::path& dir);
PosteriorDraws read_draws(const std::filesystem::path& dir);

}  // namespace icedist
