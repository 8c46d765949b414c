#pragma once

#include <json.hpp>

namespace icedist {

// Insertion-ordered so emitted reports keep a stable, readable field order.
using Json = nlohmann::ordered_json;

}  // namespace icedist

#include <stdexcept>
#include <string>
#include <vector>

namespace icedist::json_fields {

// Schema helpers: every failure names the full field path, e.g.
// "config.effect.sd: expected a positive number".

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument(path + ": " + what);
}

inline const Json& child(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    if (!j.contains(key)) fail(path + "." + key, "missing required field");
    return j.at(key);
}

inline double number(const Json& j, const std::string& key, const std::string& path) {
    const Json& v = child(j, key, path);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

inline double number_or(const Json& j, const std::string& key, const std::string& path, double fallback) {
    if (!j.contains(key)) return fallback;
    return number(j, key, path);
}

inline double positive(const Json& j, const std::string& key, const std::string& path) {
    const double v = number(j, key, path);
    if (!(v > 0.0)) fail(path + "." + key, "expected a positive number");
    return v;
}

inline long integer(const Json& j, const std::string& key, const std::string& path) {
    const Json& v = child(j, key, path);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long>();
}

inline long integer_or(const Json& j, const std::string& key, const std::string& path, long fallback) {
    if (!j.contains(key)) return fallback;
    return integer(j, key, path);
}

inline std::string string(const Json& j, const std::string& key, const std::string& path) {
    const Json& v = child(j, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> numbers(const Json& j, const std::string& key, const std::string& path) {
    const Json& v = child(j, key, path);
    if (!v.is_array()) fail(path + "." + key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

inline std::vector<std::string> strings(const Json& j, const std::string& key, const std::string& path) {
    const Json& v = child(j, key, path);
    if (!v.is_array()) fail(path + "." + key, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

}  // namespace icedist::json_fields
