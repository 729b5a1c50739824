// config.hpp: Run configuration: JSON file format, strict parsing, flag overrides

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace fgrlab::io {

using json = nlohmann::ordered_json;

// Invalid configuration; `where` names the field or "line L, column C".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string where, const std::string& what)
        : std::runtime_error(where.empty() ? what : where + ": " + what), where_(std::move(where)), message_(what) {}
    const std::string& where() const { return where_; }
    const std::string& message() const { return message_; }

private:
    std::string where_, message_;
};

struct RunConfig {
    std::string experiment;           // required
    json params = json::object();     // preset parameters; missing keys take preset defaults
    std::uint64_t seed{0};
    std::string output_dir{"runs"};
    std::string run_dir;              // explicit run directory; empty means output_dir/<experiment>_<stamp>_seed<seed>
    std::optional<std::size_t> n;     // problem-size override
    std::optional<std::size_t> instances;
    json tolerances = json::object();  // name -> positive number
    int threads{0};                    // 0: FGRLAB_THREADS or the OpenMP default
};

inline json to_json(const RunConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    j["params"] = c.params;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["run_dir"] = c.run_dir;
    j["n"] = c.n ? json(*c.n) : json(nullptr);
    j["instances"] = c.instances ? json(*c.instances) : json(nullptr);
    j["tolerances"] = c.tolerances;
    j["threads"] = c.threads;
    return j;
}

namespace detail {

inline std::size_t as_count(const json& v, const std::string& field) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw ConfigError(field, "expected a non-negative integer, got " + v.dump());
    return v.get<std::size_t>();
}

inline std::string as_string(const json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError(field, "expected a string, got " + v.dump());
    return v.get<std::string>();
}

} // namespace detail

inline RunConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
    RunConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "experiment") {
            c.experiment = detail::as_string(v, key);
        } else if (key == "params") {
            if (!v.is_object()) throw ConfigError(key, "expected an object");
            c.params = v;
        } else if (key == "seed") {
            if (!v.is_number_unsigned()) throw ConfigError(key, "expected a non-negative integer, got " + v.dump());
            c.seed = v.get<std::uint64_t>();
        } else if (key == "output_dir") {
            c.output_dir = detail::as_string(v, key);
        } else if (key == "run_dir") {
            c.run_dir = detail::as_string(v, key);
        } else if (key == "n") {
            if (!v.is_null()) c.n = detail::as_count(v, key);
        } else if (key == "instances") {
            if (!v.is_null()) c.instances = detail::as_count(v, key);
        } else if (key == "tolerances") {
            if (!v.is_object()) throw ConfigError(key, "expected an object");
            for (const auto& [name, tol] : v.items())
                if (!tol.is_number() || !(tol.get<double>() > 0.0))
                    throw ConfigError("tolerances." + name, "expected a positive number, got " + tol.dump());
            c.tolerances = v;
        } else if (key == "threads") {
            if (!v.is_number_integer() || v.get<int>() < 0)
                throw ConfigError(key, "expected a non-negative integer, got " + v.dump());
            c.threads = v.get<int>();
        } else {
            throw ConfigError(key, "unknown field");
        }
    }
    if (c.experiment.empty()) throw ConfigError("experiment", "missing experiment name");
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // Byte offset -> line and column (1-based).
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), "JSON syntax error");
    }
    return from_json(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), "cannot open configuration file");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(e.where().empty() ? path.string() : path.string() + ", " + e.where(), e.message());
    }
}

} // namespace fgrlab::io
