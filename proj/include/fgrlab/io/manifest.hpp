// manifest.hpp: Structured record of one run, written atomically at the end

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include "fgrlab/io/config.hpp"
#include "fgrlab/io/csv.hpp"
#include "fgrlab/version.hpp"

namespace fgrlab::io {

inline std::string utc_stamp(std::chrono::system_clock::time_point tp, const char* fmt = "%Y%m%dT%H%M%SZ") {
    const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::strftime(buf, sizeof buf, fmt, &tm);
    return buf;
}

struct StageTiming {
    std::string name;
    double seconds{0.0};
};

struct RunManifest {
    json config;           // the configuration as run (flags merged)
    json resolved_params;  // preset defaults merged with config params
    std::string tool_version{"fgrlab " FGRLAB_VERSION};
    std::string started, finished;
    double wall_seconds{0.0};
    int threads{0};
    std::vector<StageTiming> stages;
    json derived = json::object();
    json summary = json::object();
    std::vector<std::string> warnings;
    std::vector<std::string> outputs;
    std::string status{"running"};  // ok | failed
    std::string error;
    bool partial{false};
};

inline json to_json(const RunManifest& m) {
    json j;
    j["tool_version"] = m.tool_version;
    j["status"] = m.status;
    if (!m.error.empty()) j["error"] = m.error;
    j["partial_outputs"] = m.partial;
    j["config"] = m.config;
    j["resolved_params"] = m.resolved_params;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["wall_seconds"] = m.wall_seconds;
    j["threads"] = m.threads;
    json st = json::array();
    for (const auto& s : m.stages) st.push_back({{"name", s.name}, {"seconds", s.seconds}});
    j["stages"] = st;
    j["derived"] = m.derived;
    j["summary"] = m.summary;
    j["warnings"] = m.warnings;
    j["outputs"] = m.outputs;
    return j;
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    atomic_write(path, to_json(m).dump(2) + "\n");
}

// A manifest on disk doubles as a configuration: its "config" block re-runs the experiment.
inline RunConfig config_from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), "cannot open configuration file");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        const json j = json::parse(text);
        if (j.is_object() && j.contains("tool_version") && j.contains("config")) {
            auto c = from_json(j.at("config"));
            c.run_dir.clear();  // a re-run gets its own directory
            return c;
        }
    } catch (const json::parse_error&) {
        // fall through for the line/column diagnostic
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ", config." + e.where(), e.message());
    }
    try {
        return parse_config(text);
    } catch (const ConfigError& e) {
        throw ConfigError(e.where().empty() ? path.string() : path.string() + ", " + e.where(), e.message());
    }
}

} // namespace fgrlab::io
